#ifndef TLME_VOLTERRA_HPP
#define TLME_VOLTERRA_HPP

#include <iosfwd>
#include <vector>

#include "tlme/spectral.hpp"
#include "tlme/types.hpp"

namespace tlme {

// Green's function of the linear memory equation
//   dV/dt = -i Delta V - integral_0^t F(t - t') V(t') dt',   V(0) = I,
// sampled on a uniform time grid together with its derivative.

struct CouplingMatrix {
    Matrix delta;  // Hermitian: detunings on the diagonal, couplings off it

    explicit CouplingMatrix(Matrix d);
    static CouplingMatrix single(double detuning);
    int dim() const { return static_cast<int>(delta.rows()); }
};

class GreensTrajectory {
public:
    GreensTrajectory(int dim, double h, int steps);

    int dim() const { return dim_; }
    double step() const { return h_; }
    int steps() const { return steps_; }
    double time(int n) const { return n * h_; }
    double t_end() const { return steps_ * h_; }

    Matrix v(int n) const;
    Matrix dv(int n) const;
    Complex* v_data(int n) { return v_.data() + static_cast<size_t>(n) * dim_ * dim_; }
    Complex* dv_data(int n) { return dv_.data() + static_cast<size_t>(n) * dim_ * dim_; }
    const Complex* v_data(int n) const {
        return v_.data() + static_cast<size_t>(n) * dim_ * dim_;
    }
    const Complex* dv_data(int n) const {
        return dv_.data() + static_cast<size_t>(n) * dim_ * dim_;
    }

    // det V diagnostics. A step is flagged near-singular when |det V_n| <
    // eps_sing or when the interpolated determinant of an adjacent segment
    // passes within eps_sing of zero (a coefficient pole lives there).
    Complex det(int n) const { return det_[n]; }
    double abs_det(int n) const { return abs_det_[n]; }
    double min_abs_det() const { return min_abs_det_; }
    double eps_sing() const { return eps_sing_; }
    bool near_singular(int n) const { return flags_[n] != 0; }
    const std::vector<int>& near_singular_steps() const { return singular_steps_; }

    // Computes determinant diagnostics; eps_sing = eps_factor * max_n |det V_n|.
    void finalize_diagnostics(double eps_factor = 1e-6);

    // Columns: t, Re V_jk, Im V_jk for all jk (row-major).
    void write_csv(std::ostream& out) const;

private:
    int dim_;
    double h_;
    int steps_;
    std::vector<Complex> v_, dv_;
    std::vector<Complex> det_;
    std::vector<double> abs_det_;
    std::vector<char> flags_;
    std::vector<int> singular_steps_;
    double min_abs_det_ = 0.0;
    double eps_sing_ = 0.0;
};

// Product-trapezoidal discretization of the memory integral with trapezoidal
// time stepping; second order in h, O(steps^2) work. Handles any sampler,
// including Markovian delta components.
GreensTrajectory solve_volterra_general(const CouplingMatrix& coupling,
                                        const KernelSampler& kernel, double h,
                                        int steps);

// Exact embedding for single-exponential kernels: the memory integral is
// carried as an auxiliary state u(t) and the closed linear system
// {V' = -i Delta V - g^2 u, u' = V - (lam + i c) u} is integrated with an
// adaptive Dormand-Prince 5(4) stepper hitting every grid node. Serves as
// the reference for the general solver.
GreensTrajectory solve_volterra_expfast(const CouplingMatrix& coupling,
                                        const SpectralModel& model, double h,
                                        int steps, double rel_tol = 1e-11);

}  // namespace tlme

#endif  // TLME_VOLTERRA_HPP
