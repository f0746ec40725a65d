#include "tlme/operators.hpp"

#include <cmath>

namespace tlme {

Matrix annihilation(int cutoff) {
    if (cutoff < 2) throw ConfigError("Fock cutoff must be >= 2");
    Matrix a = Matrix::Zero(cutoff, cutoff);
    for (int n = 1; n < cutoff; ++n) a(n - 1, n) = std::sqrt(static_cast<double>(n));
    return a;
}

Matrix kron(const Matrix& a, const Matrix& b) {
    Matrix out(a.rows() * b.rows(), a.cols() * b.cols());
    for (int i = 0; i < a.rows(); ++i)
        for (int j = 0; j < a.cols(); ++j)
            out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
    return out;
}

Matrix trace_out_oscillator(const Matrix& rho, int cutoff) {
    if (rho.rows() != 2 * cutoff || rho.cols() != 2 * cutoff)
        throw ConfigError("state dimension does not match qubit (x) oscillator");
    Matrix q = Matrix::Zero(2, 2);
    for (int i = 0; i < 2; ++i)
        for (int j = 0; j < 2; ++j)
            for (int n = 0; n < cutoff; ++n) q(i, j) += rho(i * cutoff + n, j * cutoff + n);
    return q;
}

}  // namespace tlme
