#include "tlme/evolve.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <ostream>
#include <sstream>

#include "tlme/csv.hpp"
#include "tlme/operators.hpp"

namespace tlme {

namespace {

void check_density(const Matrix& rho, const char* what) {
    if (rho.rows() != rho.cols() || rho.rows() < 2)
        throw ConfigError(std::string(what) + ": density matrix must be square");
    if ((rho - rho.adjoint()).norm() > 1e-9 * std::max(1.0, rho.norm()))
        throw ConfigError(std::string(what) + ": density matrix must be Hermitian");
    if (std::abs(rho.trace() - Complex(1.0, 0.0)) > 1e-9)
        throw ConfigError(std::string(what) + ": density matrix must have unit trace");
    for (int i = 0; i < rho.rows(); ++i)
        if (std::abs(rho(i, i).imag()) > 1e-12)
            throw ConfigError(std::string(what) + ": diagonal must be real");
}

// Classical RK4 over a matrix-valued right-hand side.
template <class Rhs>
Matrix rk4_step(Rhs&& rhs, double t, double h, const Matrix& y) {
    const Matrix k1 = rhs(t, y);
    const Matrix k2 = rhs(t + 0.5 * h, Matrix(y + 0.5 * h * k1));
    const Matrix k3 = rhs(t + 0.5 * h, Matrix(y + 0.5 * h * k2));
    const Matrix k4 = rhs(t + h, Matrix(y + h * k3));
    return y + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
}

// One base step. Outside flagged pole neighborhoods a single RK4 step is
// taken; inside, the step is recursively halved until the step-doubling
// error estimate meets the budget, aborting at min_step.
template <class Rhs>
Matrix advance_step(Rhs&& rhs, const CoefficientTrack& track,
                    const EvolveConfig& cfg, double t, double h, const Matrix& y) {
    if (!track.pole_within(t, t + h)) return rk4_step(rhs, t, h, y);

    const Matrix full = rk4_step(rhs, t, h, y);
    const Matrix half = rk4_step(rhs, t + 0.5 * h,  0.5 * h,
                                 rk4_step(rhs, t, 0.5 * h, y));
    const double err = (full - half).norm() / 15.0;
    const double budget = cfg.tol * (h / cfg.h);
    if (err <= budget) return half;
    if (0.5 * h < cfg.min_step)
        throw PoleCrossingError(
            "local error cannot be bounded near a coefficient pole at t ~= " +
                std::to_string(t),
            t);
    const Matrix mid = advance_step(rhs, track, cfg, t, 0.5 * h, y);
    return advance_step(rhs, track, cfg, t + 0.5 * h, 0.5 * h, mid);
}

double min_eigenvalue_of(const Matrix& rho) {
    const Matrix sym = 0.5 * (rho + rho.adjoint());
    Eigen::SelfAdjointEigenSolver<Matrix> es(sym, Eigen::EigenvaluesOnly);
    return es.eigenvalues().minCoeff();
}

}  // namespace

void DensityMatrix::validate() const { check_density(rho, "state"); }

DensityMatrix DensityMatrix::qubit_ground() {
    DensityMatrix d;
    d.basis = BasisKind::Qubit;
    d.rho = Matrix::Zero(2, 2);
    d.rho(0, 0) = 1.0;
    return d;
}

DensityMatrix DensityMatrix::qubit_excited() {
    DensityMatrix d;
    d.basis = BasisKind::Qubit;
    d.rho = Matrix::Zero(2, 2);
    d.rho(1, 1) = 1.0;
    return d;
}

DensityMatrix DensityMatrix::boson_vacuum(int cutoff, int modes) {
    if (cutoff < 2) throw ConfigError("Fock cutoff must be >= 2");
    if (modes < 1 || modes > 2) throw ConfigError("boson basis supports 1 or 2 modes");
    DensityMatrix d;
    d.basis = BasisKind::BosonFock;
    d.cutoff = cutoff;
    d.modes = modes;
    const int dim = modes == 1 ? cutoff : cutoff * cutoff;
    d.rho = Matrix::Zero(dim, dim);
    d.rho(0, 0) = 1.0;
    return d;
}

DensityMatrix DensityMatrix::boson_coherent(Complex alpha, int cutoff) {
    if (cutoff < 2) throw ConfigError("Fock cutoff must be >= 2");
    DensityMatrix d;
    d.basis = BasisKind::BosonFock;
    d.cutoff = cutoff;
    d.modes = 1;
    Vector amp(cutoff);
    double log_fact = 0.0;
    for (int n = 0; n < cutoff; ++n) {
        if (n > 0) log_fact += std::log(static_cast<double>(n));
        amp(n) = std::pow(alpha, n) * std::exp(-0.5 * std::norm(alpha) -
                                               0.5 * log_fact);
    }
    amp /= amp.norm();  // renormalize the truncated expansion
    d.rho = amp * amp.adjoint();
    return d;
}

DensityMatrix DensityMatrix::qubit_with_vacuum(const DensityMatrix& qubit,
                                               int cutoff) {
    if (qubit.dim() != 2) throw ConfigError("qubit factor must be 2x2");
    DensityMatrix d;
    d.basis = BasisKind::QubitXFock;
    d.cutoff = cutoff;
    Matrix vac = Matrix::Zero(cutoff, cutoff);
    vac(0, 0) = 1.0;
    d.rho = kron(qubit.rho, vac);
    return d;
}

DensityMatrix DensityMatrix::from_spec(const std::string& spec, BasisKind basis,
                                       int cutoff, int modes) {
    if (spec == "ground" || spec.empty()) {
        if (basis == BasisKind::Qubit) return qubit_ground();
        if (basis == BasisKind::QubitXFock)
            return qubit_with_vacuum(qubit_ground(), cutoff);
    }
    if (spec == "excited") {
        if (basis == BasisKind::Qubit) return qubit_excited();
        if (basis == BasisKind::QubitXFock)
            return qubit_with_vacuum(qubit_excited(), cutoff);
    }
    if (spec == "vacuum" || spec.empty()) {
        if (basis == BasisKind::BosonFock) return boson_vacuum(cutoff, modes);
        if (basis == BasisKind::QubitXFock)
            return qubit_with_vacuum(qubit_ground(), cutoff);
    }
    if (spec.rfind("coherent(", 0) == 0 && spec.back() == ')') {
        if (basis != BasisKind::BosonFock || modes != 1)
            throw ConfigError("coherent initial state needs a single boson mode");
        const std::string args = spec.substr(9, spec.size() - 10);
        std::istringstream in(args);
        double re = 0.0, im = 0.0;
        char comma;
        if (!(in >> re)) throw ConfigError("cannot parse coherent amplitude: " + spec);
        if (in >> comma && comma == ',')
            if (!(in >> im)) throw ConfigError("cannot parse coherent amplitude: " + spec);
        return boson_coherent(Complex(re, im), cutoff);
    }
    if (spec.rfind("file:", 0) == 0) {
        const std::string path = spec.substr(5);
        std::ifstream in(path);
        if (!in) throw ConfigError("cannot open state file: " + path);
        std::vector<double> vals;
        double x;
        while (in >> x) vals.push_back(x);
        const int dim = static_cast<int>(std::llround(std::sqrt(vals.size() / 2.0)));
        if (vals.size() != static_cast<size_t>(dim) * dim * 2)
            throw ConfigError("state file must hold dim x dim (Re, Im) pairs");
        DensityMatrix d;
        d.basis = basis;
        d.cutoff = cutoff;
        d.modes = modes;
        d.rho = Matrix(dim, dim);
        for (int i = 0; i < dim; ++i)
            for (int j = 0; j < dim; ++j)
                d.rho(i, j) = Complex(vals[2 * (i * dim + j)], vals[2 * (i * dim + j) + 1]);
        d.validate();
        return d;
    }
    throw ConfigError("unknown initial state: '" + spec + "'");
}

void EvolveConfig::validate() const {
    if (h <= 0.0) throw ConfigError("evolve step must be positive");
    if (t_end <= 0.0) throw ConfigError("evolve horizon must be positive");
    if (cutoff < 2) throw ConfigError("Fock cutoff must be >= 2");
    if (tol <= 0.0 || min_step <= 0.0)
        throw ConfigError("tolerance and minimum step must be positive");
}

BosonTrajectory evolve_boson_tlme(const CoefficientTrack& track,
                                  const EvolveConfig& cfg, const DensityMatrix& rho0) {
    cfg.validate();
    rho0.validate();
    if (rho0.basis != BasisKind::BosonFock)
        throw ConfigError("boson equation needs a Fock-basis state");
    const int modes = track.dim();
    if (rho0.modes != modes)
        throw ConfigError("state and coefficient track mode counts disagree");
    if (modes > 2) throw ConfigError("boson equation supports at most 2 modes");
    if (track.step() > cfg.h * (1.0 + 1e-12))
        throw ConfigError("coefficient grid must be at least as fine as the step");
    if (track.t_end() < cfg.t_end - 1e-12)
        throw ConfigError("coefficient track does not cover the horizon");

    const int cutoff = rho0.cutoff;
    const int dim = rho0.dim();
    std::vector<Matrix> a(modes), ad(modes), num_op(modes), top(modes);
    {
        const Matrix a1 = annihilation(cutoff);
        const Matrix id = Matrix::Identity(cutoff, cutoff);
        for (int j = 0; j < modes; ++j) {
            a[j] = modes == 1 ? a1 : (j == 0 ? kron(a1, id) : kron(id, a1));
            ad[j] = a[j].adjoint();
            num_op[j] = ad[j] * a[j];
            Matrix p = Matrix::Zero(cutoff, cutoff);
            p(cutoff - 1, cutoff - 1) = 1.0;
            top[j] = modes == 1 ? p : (j == 0 ? kron(p, id) : kron(id, p));
        }
    }
    const bool thermal = track.thermal();

    auto rhs = [&](double t, const Matrix& rho) -> Matrix {
        const Matrix g = track.gamma_interp(t);
        const Vector xi = track.xi_interp(t);
        const Matrix lam = thermal ? track.lam_interp(t) : Matrix();
        Matrix h_drive = Matrix::Zero(dim, dim);
        for (int j = 0; j < modes; ++j)
            h_drive += xi(j) * ad[j] + std::conj(xi(j)) * a[j];
        Matrix out = -kI * (h_drive * rho - rho * h_drive);
        for (int j = 0; j < modes; ++j) {
            for (int k = 0; k < modes; ++k) {
                const Complex gjk = g(j, k);
                if (gjk != Complex(0.0, 0.0)) {
                    const Matrix akr = a[k] * rho;
                    const Matrix ajr = a[j] * rho;
                    out += gjk * (akr * ad[j] - ad[j] * akr) +
                           std::conj(gjk) * (ajr * ad[k] - rho * (ad[k] * a[j]));
                }
                if (thermal && lam(j, k) != Complex(0.0, 0.0)) {
                    const Matrix inner = a[k] * rho - rho * a[k];
                    out += lam(j, k) * (inner * ad[j] - ad[j] * inner);
                }
            }
        }
        return out;
    };

    const int steps = std::max(1, static_cast<int>(std::ceil(cfg.t_end / cfg.h - 1e-9)));
    const double h = cfg.t_end / steps;

    BosonTrajectory out;
    out.modes = modes;
    Matrix rho = rho0.rho;
    const int eig_stride = std::max(1, steps / 128);
    double min_eig = min_eigenvalue_of(rho);
    for (int n = 0; n <= steps; ++n) {
        const double t = n * h;
        out.t.push_back(t);
        for (int j = 0; j < modes; ++j) {
            out.a_mean.push_back((a[j] * rho).trace());
            out.n_mean.push_back((num_op[j] * rho).trace().real());
        }
        const double terr = std::abs(rho.trace() - Complex(1.0, 0.0));
        out.max_trace_error = std::max(out.max_trace_error, terr);
        out.trace_error.push_back(terr);
        if (n % eig_stride == 0) min_eig = std::min(min_eig, min_eigenvalue_of(rho));
        out.min_eig.push_back(min_eig);
        for (int j = 0; j < modes; ++j)
            if ((top[j] * rho).trace().real() > 1e-6) out.cutoff_warning = true;
        if (n < steps) rho = advance_step(rhs, track, cfg, t, h, rho);
    }
    out.min_eigenvalue = min_eig;
    out.final_state = rho;
    return out;
}

std::vector<Vector> exact_first_moment(const GreensTrajectory& traj,
                                       const Drive& drive, const Vector& a0) {
    if (a0.size() != traj.dim())
        throw ConfigError("initial moment dimension does not match trajectory");
    const auto conv = convolve_drive(traj, drive, false);
    std::vector<Vector> out(traj.steps() + 1);
    for (int n = 0; n <= traj.steps(); ++n) out[n] = traj.v(n) * a0 - kI * conv[n];
    return out;
}

QubitTrajectory evolve_qubit_tlme(const CoefficientTrack& track,
                                  const EvolveConfig& cfg, const DensityMatrix& rho0) {
    cfg.validate();
    rho0.validate();
    if (rho0.basis != BasisKind::Qubit || rho0.dim() != 2)
        throw ConfigError("qubit equation needs a 2x2 qubit state");
    if (track.dim() != 1)
        throw ConfigError("qubit transcription is defined for one subsystem");
    if (track.thermal())
        throw ConfigError("qubit equation supports zero-temperature tracks only");
    if (track.step() > cfg.h * (1.0 + 1e-12))
        throw ConfigError("coefficient grid must be at least as fine as the step");
    if (track.t_end() < cfg.t_end - 1e-12)
        throw ConfigError("coefficient track does not cover the horizon");

    const Matrix sm = sigma_minus();
    const Matrix sp = sm.adjoint();
    const Matrix spm = sp * sm;

    auto rhs = [&](double t, const Matrix& rho) -> Matrix {
        const Complex g = track.gamma_interp(t)(0, 0);
        const Complex xi = track.xi_interp(t)(0);
        const Matrix h_drive = xi * sp + std::conj(xi) * sm;
        Matrix out = -kI * (h_drive * rho - rho * h_drive);
        const Matrix smr = sm * rho;
        out += g * (smr * sp - spm * rho) + std::conj(g) * (smr * sp - rho * spm);
        return out;
    };

    const int steps = std::max(1, static_cast<int>(std::ceil(cfg.t_end / cfg.h - 1e-9)));
    const double h = cfg.t_end / steps;

    QubitTrajectory out;
    Matrix rho = rho0.rho;
    double min_eig = min_eigenvalue_of(rho);
    const int eig_stride = std::max(1, steps / 256);
    for (int n = 0; n <= steps; ++n) {
        out.t.push_back(n * h);
        out.sigma_minus.push_back(rho(1, 0));
        out.sigma_z.push_back((rho(1, 1) - rho(0, 0)).real());
        const double terr = std::abs(rho.trace() - Complex(1.0, 0.0));
        out.max_trace_error = std::max(out.max_trace_error, terr);
        out.trace_error.push_back(terr);
        if (n % eig_stride == 0) min_eig = std::min(min_eig, min_eigenvalue_of(rho));
        out.min_eig.push_back(min_eig);
        if (n < steps) rho = advance_step(rhs, track, cfg, n * h, h, rho);
    }
    out.min_eigenvalue = min_eig;
    out.final_state = rho;
    return out;
}

WeakExcitationReport weak_excitation_flag(const QubitTrajectory& traj,
                                          double threshold) {
    WeakExcitationReport rep;
    rep.threshold = threshold;
    for (size_t n = 0; n < traj.sigma_z.size(); ++n)
        rep.max_excited_population =
            std::max(rep.max_excited_population, 0.5 * (traj.sigma_z[n] + 1.0));
    rep.outside_weak_regime = rep.max_excited_population > threshold;
    return rep;
}

void BosonTrajectory::write_csv(std::ostream& out) const {
    out << "t";
    for (int j = 0; j < modes; ++j)
        out << ",Rea" << j << ",Ima" << j << ",n" << j;
    out << ",trace_error,min_eigenvalue\n";
    for (size_t n = 0; n < t.size(); ++n) {
        out << csv::num(t[n]);
        for (int j = 0; j < modes; ++j) {
            const Complex am = a_mean[n * modes + j];
            out << "," << csv::num(am.real()) << "," << csv::num(am.imag()) << ","
                << csv::num(n_mean[n * modes + j]);
        }
        out << "," << csv::num(trace_error[n]) << "," << csv::num(min_eig[n]) << "\n";
    }
}

void QubitTrajectory::write_csv(std::ostream& out) const {
    out << "t,Resigma_minus,Imsigma_minus,sigma_z,trace_error,min_eigenvalue\n";
    for (size_t n = 0; n < t.size(); ++n) {
        out << csv::num(t[n]) << "," << csv::num(sigma_minus[n].real()) << ","
            << csv::num(sigma_minus[n].imag()) << "," << csv::num(sigma_z[n]) << ","
            << csv::num(trace_error[n]) << "," << csv::num(min_eig[n]) << "\n";
    }
}

}  // namespace tlme
