#ifndef TLME_OPERATORS_HPP
#define TLME_OPERATORS_HPP

#include "tlme/types.hpp"

namespace tlme {

// Truncated-space operators. Fock spaces run |0> .. |cutoff-1>; the qubit
// basis is {|g>, |e>}.

Matrix annihilation(int cutoff);

inline Matrix sigma_minus() {
    Matrix s = Matrix::Zero(2, 2);
    s(0, 1) = 1.0;
    return s;
}

inline Matrix sigma_z() {
    Matrix s = Matrix::Zero(2, 2);
    s(0, 0) = -1.0;
    s(1, 1) = 1.0;
    return s;
}

Matrix kron(const Matrix& a, const Matrix& b);

// Reduced qubit state of a qubit (x) oscillator density matrix, tracing the
// oscillator out. Layout: index = q * cutoff + n.
Matrix trace_out_oscillator(const Matrix& rho, int cutoff);

}  // namespace tlme

#endif  // TLME_OPERATORS_HPP
