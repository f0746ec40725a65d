#ifndef TLME_COEFFS_HPP
#define TLME_COEFFS_HPP

#include <functional>
#include <iosfwd>
#include <optional>
#include <vector>

#include "tlme/spectral.hpp"
#include "tlme/types.hpp"
#include "tlme/volterra.hpp"

namespace tlme {

// Time-local coefficients extracted from a Green's-function trajectory:
//   gamma(t) = -dV/dt V^-1                  (decay and frequency pulling)
//   xi(t)    = gamma (V*Omega) + Omega + (dV*Omega)   (repackaged drive)
//   W(t)     = double convolution of the noise kernel  (thermal covariance)
//   lam(t)   = dW/dt + gamma W + W gamma^dagger        (thermal coefficient)

struct Drive {
    static Drive none(int dim);
    static Drive constant(Vector amplitudes);
    static Drive callable(int dim, std::function<Vector(double)> fn);

    Vector at(double t) const;
    int dim() const { return dim_; }
    bool is_constant() const { return !fn_; }
    bool is_zero() const;

private:
    int dim_ = 0;
    Vector const_amp_;
    std::function<Vector(double)> fn_;
};

// gamma_n = -dV_n V_n^-1; near-singular steps are computed as they come
// (possibly huge) and flagged by the caller via the trajectory.
std::vector<Matrix> gamma_track(const GreensTrajectory& traj);

// Product-trapezoid convolution (X * Omega)(t_n) with X = V or dV.
std::vector<Vector> convolve_drive(const GreensTrajectory& traj, const Drive& drive,
                                   bool use_derivative);

// xi_n = gamma_n (V*Omega)_n + Omega(t_n) + (dV*Omega)_n. The derivative of
// the convolution is expanded analytically (V(0) = I), never differenced.
std::vector<Vector> xi_track(const GreensTrajectory& traj, const Drive& drive,
                             const std::vector<Matrix>& gamma);

struct WTrack {
    std::vector<Matrix> w;     // W(t_n), Hermitian PSD
    std::vector<Matrix> dwdt;  // analytic boundary-term derivative
};

// Incremental double product-trapezoid of V(t-t1) G(t12) V^dag(t-t2); total
// cost O(steps^2) matrix operations.
WTrack w_track(const GreensTrajectory& traj, const SpectralModel& model);

// lam_n from the analytic dW/dt when available, centered differences (one
// sided at the ends) otherwise.
std::vector<Matrix> lambda_track(const WTrack& w, const std::vector<Matrix>& gamma,
                                 double h);

// Bundled track on the trajectory grid, ready for the integrators.
class CoefficientTrack {
public:
    CoefficientTrack(int dim, double h, int steps);

    int dim() const { return dim_; }
    double step() const { return h_; }
    int steps() const { return steps_; }
    double time(int n) const { return n * h_; }
    double t_end() const { return steps_ * h_; }

    Matrix gamma(int n) const;
    Vector xi(int n) const;
    Vector conv(int n) const;  // (V*Omega)(t_n)
    Matrix w(int n) const;
    Matrix lam(int n) const;
    bool pole_flag(int n) const { return flags_[n] != 0; }
    bool any_pole() const;
    bool thermal() const { return thermal_; }

    // Cubic interpolation between grid samples (uniform grid); garbage by
    // construction inside flagged pole neighborhoods.
    Matrix gamma_interp(double t) const;
    Vector xi_interp(double t) const;
    Matrix lam_interp(double t) const;
    // flagged node inside [t0, t1] with a one-node buffer on each side
    bool pole_within(double t0, double t1) const;
    // flagged node strictly inside [t0, t1]: samples there are unusable
    bool flagged_node_in(double t0, double t1) const;

    // Columns: t, Re/Im gamma_jk, Re/Im xi_j, Re/Im lam_jk, pole flag.
    void write_csv(std::ostream& out) const;

    friend CoefficientTrack build_coefficients(const GreensTrajectory& traj,
                                               const Drive& drive,
                                               const SpectralModel* noise_model);

private:
    int dim_;
    double h_;
    int steps_;
    bool thermal_ = false;
    std::vector<Complex> gamma_, xi_, conv_, w_, lam_;
    std::vector<char> flags_;
};

// Orchestrates the individual tracks; noise_model may be null (or at zero
// temperature) in which case W and lam vanish identically.
CoefficientTrack build_coefficients(const GreensTrajectory& traj, const Drive& drive,
                                    const SpectralModel* noise_model = nullptr);

}  // namespace tlme

#endif  // TLME_COEFFS_HPP
