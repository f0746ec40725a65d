#include "tlme/volterra.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>

#include "tlme/csv.hpp"

namespace tlme {

namespace {

Matrix identity(int n) { return Matrix::Identity(n, n); }

// ------------------------------------------------------------------
// Dormand-Prince 5(4) on a flat complex state
// ------------------------------------------------------------------

struct Dp54 {
    static constexpr double a21 = 1.0 / 5;
    static constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
    static constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
    static constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187,
                            a53 = 64448.0 / 6561, a54 = -212.0 / 729;
    static constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33,
                            a63 = 46732.0 / 5247, a64 = 49.0 / 176,
                            a65 = -5103.0 / 18656;
    static constexpr double b1 = 35.0 / 384, b3 = 500.0 / 1113, b4 = 125.0 / 192,
                            b5 = -2187.0 / 6784, b6 = 11.0 / 84;
    static constexpr double e1 = 35.0 / 384 - 5179.0 / 57600,
                            e3 = 500.0 / 1113 - 7571.0 / 16695,
                            e4 = 125.0 / 192 - 393.0 / 640,
                            e5 = -2187.0 / 6784 + 92097.0 / 339200,
                            e6 = 11.0 / 84 - 187.0 / 2100, e7 = -1.0 / 40;
    static constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
};

// Integrates y' = rhs(t, y) from t to t_end, adjusting the step from the
// embedded 4th-order error estimate; the final step lands on t_end exactly.
template <class RhsFn>
void dp54_advance(RhsFn&& rhs, std::vector<Complex>& y, double& t, double t_end,
                  double rel_tol, double abs_tol, double& h_guess) {
    const size_t n = y.size();
    std::vector<Complex> k1(n), k2(n), k3(n), k4(n), k5(n), k6(n), k7(n), ytmp(n),
        y5(n);
    rhs(t, y, k1);
    bool fsal_valid = true;
    int rejections_in_a_row = 0;
    while (t < t_end) {
        double h = std::min(h_guess, t_end - t);
        if (h <= 1e-15 * std::max(1.0, std::abs(t)))
            throw SolverError("adaptive step underflow in exponential-kernel solver");
        if (!fsal_valid) rhs(t, y, k1);

        for (size_t i = 0; i < n; ++i) ytmp[i] = y[i] + h * (Dp54::a21 * k1[i]);
        rhs(t + Dp54::c2 * h, ytmp, k2);
        for (size_t i = 0; i < n; ++i)
            ytmp[i] = y[i] + h * (Dp54::a31 * k1[i] + Dp54::a32 * k2[i]);
        rhs(t + Dp54::c3 * h, ytmp, k3);
        for (size_t i = 0; i < n; ++i)
            ytmp[i] = y[i] + h * (Dp54::a41 * k1[i] + Dp54::a42 * k2[i] +
                                  Dp54::a43 * k3[i]);
        rhs(t + Dp54::c4 * h, ytmp, k4);
        for (size_t i = 0; i < n; ++i)
            ytmp[i] = y[i] + h * (Dp54::a51 * k1[i] + Dp54::a52 * k2[i] +
                                  Dp54::a53 * k3[i] + Dp54::a54 * k4[i]);
        rhs(t + Dp54::c5 * h, ytmp, k5);
        for (size_t i = 0; i < n; ++i)
            ytmp[i] = y[i] + h * (Dp54::a61 * k1[i] + Dp54::a62 * k2[i] +
                                  Dp54::a63 * k3[i] + Dp54::a64 * k4[i] +
                                  Dp54::a65 * k5[i]);
        rhs(t + h, ytmp, k6);
        for (size_t i = 0; i < n; ++i)
            y5[i] = y[i] + h * (Dp54::b1 * k1[i] + Dp54::b3 * k3[i] +
                                Dp54::b4 * k4[i] + Dp54::b5 * k5[i] +
                                Dp54::b6 * k6[i]);
        rhs(t + h, y5, k7);

        double err = 0.0;
        for (size_t i = 0; i < n; ++i) {
            const Complex de = h * (Dp54::e1 * k1[i] + Dp54::e3 * k3[i] +
                                    Dp54::e4 * k4[i] + Dp54::e5 * k5[i] +
                                    Dp54::e6 * k6[i] + Dp54::e7 * k7[i]);
            const double scale = abs_tol + rel_tol * std::max(std::abs(y[i]),
                                                              std::abs(y5[i]));
            err = std::max(err, std::abs(de) / scale);
        }
        if (err <= 1.0) {
            t += h;
            y.swap(y5);
            k1.swap(k7);  // first-same-as-last
            fsal_valid = true;
            rejections_in_a_row = 0;
            const double grow = err > 0.0 ? 0.9 * std::pow(err, -0.2) : 5.0;
            h_guess = h * std::clamp(grow, 0.2, 5.0);
        } else {
            fsal_valid = false;
            if (++rejections_in_a_row > 60)
                throw SolverError("adaptive stepper failed to meet tolerance");
            h_guess = h * std::clamp(0.9 * std::pow(err, -0.25), 0.1, 0.9);
        }
    }
}

}  // namespace

CouplingMatrix::CouplingMatrix(Matrix d) : delta(std::move(d)) {
    if (delta.rows() != delta.cols() || delta.rows() < 1)
        throw ConfigError("coupling matrix must be square and nonempty");
    if ((delta - delta.adjoint()).norm() > 1e-12 * std::max(1.0, delta.norm()))
        throw ConfigError("coupling matrix must be Hermitian");
}

CouplingMatrix CouplingMatrix::single(double detuning) {
    Matrix d(1, 1);
    d(0, 0) = detuning;
    return CouplingMatrix(std::move(d));
}

GreensTrajectory::GreensTrajectory(int dim, double h, int steps)
    : dim_(dim), h_(h), steps_(steps) {
    if (dim < 1) throw ConfigError("trajectory dimension must be >= 1");
    if (h <= 0.0) throw ConfigError("step size must be positive");
    if (steps < 1) throw ConfigError("need at least one step");
    const size_t total = static_cast<size_t>(steps + 1) * dim * dim;
    v_.assign(total, Complex(0.0, 0.0));
    dv_.assign(total, Complex(0.0, 0.0));
    det_.assign(steps + 1, Complex(0.0, 0.0));
    abs_det_.assign(steps + 1, 0.0);
    flags_.assign(steps + 1, 0);
}

Matrix GreensTrajectory::v(int n) const {
    return Eigen::Map<const Matrix>(v_data(n), dim_, dim_).transpose();
}

Matrix GreensTrajectory::dv(int n) const {
    return Eigen::Map<const Matrix>(dv_data(n), dim_, dim_).transpose();
}

void GreensTrajectory::finalize_diagnostics(double eps_factor) {
    double max_det = 0.0;
    for (int n = 0; n <= steps_; ++n) {
        Complex d;
        if (dim_ == 1) {
            d = v_data(n)[0];
        } else {
            d = Eigen::Map<const Matrix>(v_data(n), dim_, dim_).determinant();
        }
        det_[n] = d;
        abs_det_[n] = std::abs(d);
        max_det = std::max(max_det, abs_det_[n]);
    }
    eps_sing_ = eps_factor * max_det;
    min_abs_det_ = max_det;
    singular_steps_.clear();
    for (int n = 0; n <= steps_; ++n) {
        min_abs_det_ = std::min(min_abs_det_, abs_det_[n]);
        flags_[n] = abs_det_[n] < eps_sing_ ? 1 : 0;
    }
    // flag segments whose interpolated determinant passes near zero
    for (int n = 0; n + 1 <= steps_; ++n) {
        const Complex d0 = det_[n], step = det_[n + 1] - det_[n];
        const double len2 = std::norm(step);
        if (len2 == 0.0) continue;
        const double s =
            std::clamp(-(d0.real() * step.real() + d0.imag() * step.imag()) / len2,
                       0.0, 1.0);
        if (std::abs(d0 + s * step) < eps_sing_) {
            flags_[n] = 1;
            flags_[n + 1] = 1;
        }
    }
    for (int n = 0; n <= steps_; ++n)
        if (flags_[n]) singular_steps_.push_back(n);
}

void GreensTrajectory::write_csv(std::ostream& out) const {
    out << "t";
    for (int j = 0; j < dim_; ++j)
        for (int k = 0; k < dim_; ++k)
            out << ",ReV" << j << k << ",ImV" << j << k;
    out << "\n";
    for (int n = 0; n <= steps_; ++n) {
        out << csv::num(time(n));
        const Complex* row = v_data(n);
        for (int e = 0; e < dim_ * dim_; ++e)
            out << "," << csv::num(row[e].real()) << "," << csv::num(row[e].imag());
        out << "\n";
    }
}

GreensTrajectory solve_volterra_general(const CouplingMatrix& coupling,
                                        const KernelSampler& kernel, double h,
                                        int steps) {
    const int n_dim = coupling.dim();
    if (kernel.dim() != n_dim)
        throw ConfigError("kernel and coupling dimensions disagree");
    GreensTrajectory traj(n_dim, h, steps);

    if (n_dim == 1) {
        // scalar fast path: the lagged sums dominate the O(steps^2) cost,
        // so keep them as four-way unrolled real dot products
        // kernel stored reversed so the lagged dot product reads both
        // arrays with ascending stride
        std::vector<double> fr(steps + 1), fi(steps + 1);
        for (int k = 0; k <= steps; ++k) {
            const Complex fk = kernel.dissipation(k * h)(0, 0);
            fr[steps - k] = fk.real();
            fi[steps - k] = fk.imag();
        }
        const Complex f0(fr[steps], fi[steps]);
        const Complex a_eff = kI * coupling.delta(0, 0) +
                              0.5 * kernel.delta_weight()(0, 0);
        const Complex a_lhs = 1.0 + 0.5 * h * a_eff + 0.25 * h * h * f0;
        if (std::abs(a_lhs) < 1e-12)
            throw SolverError("implicit step singular: step too large for this kernel");
        std::vector<double> vr(steps + 1), vi(steps + 1);
        std::vector<Complex> dv(steps + 1);
        vr[0] = 1.0;
        vi[0] = 0.0;
        dv[0] = -a_eff;
        for (int n = 1; n <= steps; ++n) {
            // lag = sum_j F[n - j] V[j] = sum_j Frev[base + j] V[j]
            const double* cfr = fr.data() + (steps - n);
            const double* cfi = fi.data() + (steps - n);
            double sr[4] = {0, 0, 0, 0}, si[4] = {0, 0, 0, 0};
            int j = 1;
            for (; j + 3 < n; j += 4) {
                for (int u = 0; u < 4; ++u) {
                    const double ar = cfr[j + u], ai = cfi[j + u];
                    const double br = vr[j + u], bi = vi[j + u];
                    sr[u] += ar * br - ai * bi;
                    si[u] += ar * bi + ai * br;
                }
            }
            for (; j < n; ++j) {
                sr[0] += cfr[j] * vr[j] - cfi[j] * vi[j];
                si[0] += cfr[j] * vi[j] + cfi[j] * vr[j];
            }
            Complex lag(sr[0] + sr[1] + sr[2] + sr[3], si[0] + si[1] + si[2] + si[3]);
            lag += 0.5 * Complex(cfr[0], cfi[0]);  // j = 0 term, V(0) = 1
            lag *= h;
            const Complex b =
                Complex(vr[n - 1], vi[n - 1]) + 0.5 * h * dv[n - 1] - 0.5 * h * lag;
            const Complex vn = b / a_lhs;
            vr[n] = vn.real();
            vi[n] = vn.imag();
            dv[n] = -a_eff * vn - (lag + 0.5 * h * f0 * vn);
        }
        for (int n = 0; n <= steps; ++n) {
            traj.v_data(n)[0] = Complex(vr[n], vi[n]);
            traj.dv_data(n)[0] = dv[n];
        }
        traj.finalize_diagnostics();
        return traj;
    }

    std::vector<Matrix> f(steps + 1);
    for (int k = 0; k <= steps; ++k) f[k] = kernel.dissipation(k * h);
    const Matrix a_eff = kI * coupling.delta + 0.5 * kernel.delta_weight();
    const Matrix a_lhs =
        identity(n_dim) + 0.5 * h * a_eff + 0.25 * h * h * f[0];
    Eigen::PartialPivLU<Matrix> lu(a_lhs);
    if (std::abs(lu.determinant()) < 1e-12 * std::pow(a_lhs.norm(), n_dim))
        throw SolverError("implicit step singular: step too large for this kernel");

    std::vector<Matrix> v(steps + 1), dv(steps + 1);
    v[0] = identity(n_dim);
    dv[0] = -a_eff;
    for (int n = 1; n <= steps; ++n) {
        Matrix lag = 0.5 * f[n] * v[0];
        for (int j = 1; j < n; ++j) lag.noalias() += f[n - j] * v[j];
        lag *= h;
        const Matrix b = v[n - 1] + 0.5 * h * dv[n - 1] - 0.5 * h * lag;
        v[n] = lu.solve(b);
        dv[n] = -a_eff * v[n] - (lag + 0.5 * h * f[0] * v[n]);
    }
    for (int n = 0; n <= steps; ++n) {
        Eigen::Map<Matrix>(traj.v_data(n), n_dim, n_dim) = v[n].transpose();
        Eigen::Map<Matrix>(traj.dv_data(n), n_dim, n_dim) = dv[n].transpose();
    }
    traj.finalize_diagnostics();
    return traj;
}

GreensTrajectory solve_volterra_expfast(const CouplingMatrix& coupling,
                                        const SpectralModel& model, double h,
                                        int steps, double rel_tol) {
    model.validate();
    const int n_dim = coupling.dim();
    if (model.dim() != n_dim)
        throw ConfigError("spectral model and coupling dimensions disagree");
    if (!model.exponential_kernels())
        throw ConfigError(
            "exponential-kernel solver requires Lorentzian or Markovian models");

    GreensTrajectory traj(n_dim, h, steps);
    const int nn = n_dim * n_dim;

    // decay constants and squared couplings per subenvironment row
    std::vector<Complex> z(n_dim);
    std::vector<double> g2(n_dim);
    Matrix a_eff = kI * coupling.delta;
    for (int j = 0; j < n_dim; ++j) {
        const auto& env = model.envs[j];
        if (env.kind == SpectralKind::Lorentzian) {
            z[j] = Complex(env.linewidth, env.center());
            g2[j] = env.coupling * env.linewidth / 2.0;
        } else {  // Markovian: direct local damping
            z[j] = Complex(1.0, 0.0);
            g2[j] = 0.0;
            a_eff(j, j) += 0.5 * env.coupling;
        }
    }

    // state layout: V (row-major, nn entries) then U (nn entries)
    auto rhs = [&](double, const std::vector<Complex>& y, std::vector<Complex>& dy) {
        for (int j = 0; j < n_dim; ++j) {
            for (int k = 0; k < n_dim; ++k) {
                Complex acc = -g2[j] * y[nn + j * n_dim + k];
                for (int m = 0; m < n_dim; ++m)
                    acc -= a_eff(j, m) * y[m * n_dim + k];
                dy[j * n_dim + k] = acc;
                dy[nn + j * n_dim + k] =
                    y[j * n_dim + k] - z[j] * y[nn + j * n_dim + k];
            }
        }
    };

    std::vector<Complex> y(2 * nn, Complex(0.0, 0.0));
    for (int j = 0; j < n_dim; ++j) y[j * n_dim + j] = 1.0;

    std::vector<Complex> dy(2 * nn);
    double t = 0.0;
    double h_guess = h;
    for (int n = 0; n <= steps; ++n) {
        if (n > 0) dp54_advance(rhs, y, t, n * h, rel_tol, 1e-14, h_guess);
        rhs(t, y, dy);
        std::copy(y.begin(), y.begin() + nn, traj.v_data(n));
        std::copy(dy.begin(), dy.begin() + nn, traj.dv_data(n));
    }
    traj.finalize_diagnostics();
    return traj;
}

}  // namespace tlme
