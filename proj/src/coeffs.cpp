#include "tlme/coeffs.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>

#include "tlme/csv.hpp"

namespace tlme {

Drive Drive::none(int dim) { return constant(Vector::Zero(dim)); }

Drive Drive::constant(Vector amplitudes) {
    Drive d;
    d.dim_ = static_cast<int>(amplitudes.size());
    d.const_amp_ = std::move(amplitudes);
    if (d.dim_ < 1) throw ConfigError("drive needs at least one subsystem");
    if (!d.const_amp_.allFinite()) throw ConfigError("drive amplitude must be finite");
    return d;
}

Drive Drive::callable(int dim, std::function<Vector(double)> fn) {
    Drive d;
    d.dim_ = dim;
    d.fn_ = std::move(fn);
    if (dim < 1) throw ConfigError("drive needs at least one subsystem");
    if (!d.fn_) throw ConfigError("drive callable must be set");
    return d;
}

Vector Drive::at(double t) const {
    if (!fn_) return const_amp_;
    Vector v = fn_(t);
    if (v.size() != dim_) throw ConfigError("drive callable returned wrong dimension");
    if (!v.allFinite()) throw ConfigError("drive amplitude must be finite");
    return v;
}

bool Drive::is_zero() const { return is_constant() && const_amp_.norm() == 0.0; }

std::vector<Matrix> gamma_track(const GreensTrajectory& traj) {
    const int n_dim = traj.dim();
    std::vector<Matrix> gamma(traj.steps() + 1);
    for (int n = 0; n <= traj.steps(); ++n) {
        if (n_dim == 1) {
            Matrix g(1, 1);
            g(0, 0) = -traj.dv_data(n)[0] / traj.v_data(n)[0];
            gamma[n] = g;
        } else {
            // gamma V = -dV  =>  V^T gamma^T = -dV^T
            const Matrix v = traj.v(n);
            const Matrix dv = traj.dv(n);
            gamma[n] = -(v.transpose().partialPivLu().solve(dv.transpose())).transpose();
        }
    }
    return gamma;
}

std::vector<Vector> convolve_drive(const GreensTrajectory& traj, const Drive& drive,
                                   bool use_derivative) {
    const int n_dim = traj.dim();
    if (drive.dim() != n_dim)
        throw ConfigError("drive and trajectory dimensions disagree");
    const int steps = traj.steps();
    const double h = traj.step();
    auto x_at = [&](int n) {
        return use_derivative ? traj.dv(n) : traj.v(n);
    };
    std::vector<Vector> out(steps + 1, Vector::Zero(n_dim));
    if (drive.is_constant()) {
        const Vector amp = drive.at(0.0);
        Matrix prefix = Matrix::Zero(n_dim, n_dim);  // sum of X_0..X_n
        Matrix x0 = x_at(0);
        prefix = x0;
        std::vector<Matrix> xs(steps + 1);
        xs[0] = x0;
        for (int n = 1; n <= steps; ++n) {
            xs[n] = x_at(n);
            prefix += xs[n];
            out[n] = h * ((prefix - 0.5 * xs[0] - 0.5 * xs[n]) * amp);
        }
        return out;
    }
    std::vector<Matrix> xs(steps + 1);
    std::vector<Vector> omega(steps + 1);
    for (int n = 0; n <= steps; ++n) {
        xs[n] = x_at(n);
        omega[n] = drive.at(traj.time(n));
    }
    for (int n = 1; n <= steps; ++n) {
        Vector acc = 0.5 * (xs[n] * omega[0]) + 0.5 * (xs[0] * omega[n]);
        for (int j = 1; j < n; ++j) acc.noalias() += xs[n - j] * omega[j];
        out[n] = h * acc;
    }
    return out;
}

std::vector<Vector> xi_track(const GreensTrajectory& traj, const Drive& drive,
                             const std::vector<Matrix>& gamma) {
    if (static_cast<int>(gamma.size()) != traj.steps() + 1)
        throw ConfigError("gamma samples and trajectory grid disagree");
    const auto conv = convolve_drive(traj, drive, false);
    const auto dconv = convolve_drive(traj, drive, true);
    std::vector<Vector> xi(traj.steps() + 1);
    for (int n = 0; n <= traj.steps(); ++n)
        xi[n] = gamma[n] * conv[n] + drive.at(traj.time(n)) + dconv[n];
    return xi;
}

WTrack w_track(const GreensTrajectory& traj, const SpectralModel& model) {
    const int n_dim = traj.dim();
    if (model.dim() != n_dim)
        throw ConfigError("noise model and trajectory dimensions disagree");
    const int steps = traj.steps();
    const double h = traj.step();
    const Matrix zero = Matrix::Zero(n_dim, n_dim);

    WTrack out;
    out.w.assign(steps + 1, zero);
    out.dwdt.assign(steps + 1, zero);
    if (model.zero_temperature()) return out;

    const auto g_grid = noise_kernel_grid(model, h, steps);
    auto g_at = [&](int k) -> Matrix {
        return k >= 0 ? g_grid[k] : Matrix(g_grid[-k].adjoint());
    };

    std::vector<Matrix> v(steps + 1), vdag(steps + 1);
    for (int n = 0; n <= steps; ++n) {
        v[n] = traj.v(n);
        vdag[n] = v[n].adjoint();
    }

    // q[j] accumulates sum_i c_i V_i G_{j-i} as the outer time advances
    std::vector<Matrix> q(steps + 1, zero);
    for (int n = 1; n <= steps; ++n) {
        // initialize the fresh lag index from scratch
        Matrix fresh = 0.5 * (v[0] * g_at(n)) + 0.5 * (v[n] * g_at(0));
        for (int i = 1; i < n; ++i) fresh.noalias() += v[i] * g_at(n - i);
        q[n] = fresh;
        // advance existing lags across the new time slice
        for (int j = 0; j < n; ++j) {
            q[j].noalias() += 0.5 * (v[n - 1] * g_at(j - (n - 1)));
            q[j].noalias() += 0.5 * (v[n] * g_at(j - n));
        }
        Matrix w = 0.5 * (q[0] * vdag[0]) + 0.5 * (q[n] * vdag[n]);
        for (int j = 1; j < n; ++j) w.noalias() += q[j] * vdag[j];
        w *= h * h;
        out.w[n] = 0.5 * (w + w.adjoint());
        const Matrix y = h * q[n];  // integral of V(u) G(t-u) du
        const Matrix dw = y * vdag[n] + v[n] * y.adjoint();
        out.dwdt[n] = 0.5 * (dw + dw.adjoint());
    }
    return out;
}

std::vector<Matrix> lambda_track(const WTrack& w, const std::vector<Matrix>& gamma,
                                 double h) {
    const size_t count = w.w.size();
    if (gamma.size() != count)
        throw ConfigError("gamma and W samples disagree in length");
    const bool analytic = w.dwdt.size() == count;
    std::vector<Matrix> lam(count);
    for (size_t n = 0; n < count; ++n) {
        Matrix dwdt;
        if (analytic) {
            dwdt = w.dwdt[n];
        } else if (n == 0) {
            dwdt = (-3.0 * w.w[0] + 4.0 * w.w[1] - w.w[2]) / (2.0 * h);
        } else if (n + 1 == count) {
            dwdt = (3.0 * w.w[n] - 4.0 * w.w[n - 1] + w.w[n - 2]) / (2.0 * h);
        } else {
            dwdt = (w.w[n + 1] - w.w[n - 1]) / (2.0 * h);
        }
        const Matrix l = dwdt + gamma[n] * w.w[n] + w.w[n] * gamma[n].adjoint();
        lam[n] = 0.5 * (l + l.adjoint());
    }
    return lam;
}

CoefficientTrack::CoefficientTrack(int dim, double h, int steps)
    : dim_(dim), h_(h), steps_(steps) {
    const size_t nn = static_cast<size_t>(steps + 1) * dim * dim;
    const size_t nv = static_cast<size_t>(steps + 1) * dim;
    gamma_.assign(nn, Complex(0, 0));
    xi_.assign(nv, Complex(0, 0));
    conv_.assign(nv, Complex(0, 0));
    w_.assign(nn, Complex(0, 0));
    lam_.assign(nn, Complex(0, 0));
    flags_.assign(steps + 1, 0);
}

namespace {

Matrix unflatten(const std::vector<Complex>& data, int n, int dim) {
    Matrix m(dim, dim);
    const Complex* p = data.data() + static_cast<size_t>(n) * dim * dim;
    for (int j = 0; j < dim; ++j)
        for (int k = 0; k < dim; ++k) m(j, k) = p[j * dim + k];
    return m;
}

Vector unflatten_vec(const std::vector<Complex>& data, int n, int dim) {
    Vector v(dim);
    const Complex* p = data.data() + static_cast<size_t>(n) * dim;
    for (int j = 0; j < dim; ++j) v(j) = p[j];
    return v;
}

void cubic_weights(double s, double w[4]) {
    w[0] = -(s - 1.0) * (s - 2.0) * (s - 3.0) / 6.0;
    w[1] = s * (s - 2.0) * (s - 3.0) / 2.0;
    w[2] = -s * (s - 1.0) * (s - 3.0) / 2.0;
    w[3] = s * (s - 1.0) * (s - 2.0) / 6.0;
}

}  // namespace

Matrix CoefficientTrack::gamma(int n) const { return unflatten(gamma_, n, dim_); }
Vector CoefficientTrack::xi(int n) const { return unflatten_vec(xi_, n, dim_); }
Vector CoefficientTrack::conv(int n) const { return unflatten_vec(conv_, n, dim_); }
Matrix CoefficientTrack::w(int n) const { return unflatten(w_, n, dim_); }
Matrix CoefficientTrack::lam(int n) const { return unflatten(lam_, n, dim_); }

bool CoefficientTrack::any_pole() const {
    return std::any_of(flags_.begin(), flags_.end(), [](char f) { return f != 0; });
}

namespace {

void interp_base(double t, double h, int steps, int& n0, double w[4]) {
    if (steps < 3) throw ConfigError("coefficient grid too short for interpolation");
    double pos = t / h;
    pos = std::clamp(pos, 0.0, static_cast<double>(steps));
    int base = static_cast<int>(std::floor(pos));
    n0 = std::clamp(base - 1, 0, steps - 3);
    cubic_weights(pos - n0, w);
}

}  // namespace

Matrix CoefficientTrack::gamma_interp(double t) const {
    int n0;
    double w[4];
    interp_base(t, h_, steps_, n0, w);
    Matrix out = Matrix::Zero(dim_, dim_);
    for (int k = 0; k < 4; ++k) out += w[k] * gamma(n0 + k);
    return out;
}

Vector CoefficientTrack::xi_interp(double t) const {
    int n0;
    double w[4];
    interp_base(t, h_, steps_, n0, w);
    Vector out = Vector::Zero(dim_);
    for (int k = 0; k < 4; ++k) out += w[k] * xi(n0 + k);
    return out;
}

Matrix CoefficientTrack::lam_interp(double t) const {
    int n0;
    double w[4];
    interp_base(t, h_, steps_, n0, w);
    Matrix out = Matrix::Zero(dim_, dim_);
    for (int k = 0; k < 4; ++k) out += w[k] * lam(n0 + k);
    return out;
}

bool CoefficientTrack::pole_within(double t0, double t1) const {
    if (t1 < t0) std::swap(t0, t1);
    int lo = std::clamp(static_cast<int>(std::floor(t0 / h_)) - 1, 0, steps_);
    int hi = std::clamp(static_cast<int>(std::ceil(t1 / h_)) + 1, 0, steps_);
    for (int n = lo; n <= hi; ++n)
        if (flags_[n]) return true;
    return false;
}

bool CoefficientTrack::flagged_node_in(double t0, double t1) const {
    if (t1 < t0) std::swap(t0, t1);
    int lo = std::clamp(static_cast<int>(std::ceil(t0 / h_ - 1e-12)), 0, steps_);
    int hi = std::clamp(static_cast<int>(std::floor(t1 / h_ + 1e-12)), 0, steps_);
    for (int n = lo; n <= hi; ++n)
        if (flags_[n]) return true;
    return false;
}

void CoefficientTrack::write_csv(std::ostream& out) const {
    out << "t";
    for (int j = 0; j < dim_; ++j)
        for (int k = 0; k < dim_; ++k)
            out << ",Regamma" << j << k << ",Imgamma" << j << k;
    for (int j = 0; j < dim_; ++j) out << ",Rexi" << j << ",Imxi" << j;
    for (int j = 0; j < dim_; ++j)
        for (int k = 0; k < dim_; ++k)
            out << ",Relambda" << j << k << ",Imlambda" << j << k;
    out << ",pole\n";
    for (int n = 0; n <= steps_; ++n) {
        out << csv::num(time(n));
        const Complex* g = gamma_.data() + static_cast<size_t>(n) * dim_ * dim_;
        for (int e = 0; e < dim_ * dim_; ++e)
            out << "," << csv::num(g[e].real()) << "," << csv::num(g[e].imag());
        const Complex* x = xi_.data() + static_cast<size_t>(n) * dim_;
        for (int e = 0; e < dim_; ++e)
            out << "," << csv::num(x[e].real()) << "," << csv::num(x[e].imag());
        const Complex* l = lam_.data() + static_cast<size_t>(n) * dim_ * dim_;
        for (int e = 0; e < dim_ * dim_; ++e)
            out << "," << csv::num(l[e].real()) << "," << csv::num(l[e].imag());
        out << "," << (flags_[n] ? 1 : 0) << "\n";
    }
}

CoefficientTrack build_coefficients(const GreensTrajectory& traj, const Drive& drive,
                                    const SpectralModel* noise_model) {
    const int n_dim = traj.dim();
    CoefficientTrack track(n_dim, traj.step(), traj.steps());

    const auto gamma = gamma_track(traj);
    const auto conv = convolve_drive(traj, drive, false);
    const auto xi = xi_track(traj, drive, gamma);

    std::vector<Matrix> lam;
    if (noise_model != nullptr && !noise_model->zero_temperature()) {
        const auto wt = w_track(traj, *noise_model);
        lam = lambda_track(wt, gamma, traj.step());
        track.thermal_ = true;
        for (int n = 0; n <= traj.steps(); ++n) {
            Complex* wp = track.w_.data() + static_cast<size_t>(n) * n_dim * n_dim;
            for (int j = 0; j < n_dim; ++j)
                for (int k = 0; k < n_dim; ++k) wp[j * n_dim + k] = wt.w[n](j, k);
        }
    }

    for (int n = 0; n <= traj.steps(); ++n) {
        Complex* gp = track.gamma_.data() + static_cast<size_t>(n) * n_dim * n_dim;
        for (int j = 0; j < n_dim; ++j)
            for (int k = 0; k < n_dim; ++k) gp[j * n_dim + k] = gamma[n](j, k);
        Complex* xp = track.xi_.data() + static_cast<size_t>(n) * n_dim;
        Complex* cp = track.conv_.data() + static_cast<size_t>(n) * n_dim;
        for (int j = 0; j < n_dim; ++j) {
            xp[j] = xi[n](j);
            cp[j] = conv[n](j);
        }
        if (!lam.empty()) {
            Complex* lp = track.lam_.data() + static_cast<size_t>(n) * n_dim * n_dim;
            for (int j = 0; j < n_dim; ++j)
                for (int k = 0; k < n_dim; ++k) lp[j * n_dim + k] = lam[n](j, k);
        }
        track.flags_[n] = traj.near_singular(n) ? 1 : 0;
    }
    return track;
}

}  // namespace tlme
