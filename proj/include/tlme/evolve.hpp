#ifndef TLME_EVOLVE_HPP
#define TLME_EVOLVE_HPP

#include <iosfwd>
#include <string>
#include <vector>

#include "tlme/coeffs.hpp"
#include "tlme/types.hpp"
#include "tlme/volterra.hpp"

namespace tlme {

// Density-matrix propagation under the time-local master equations, plus the
// closed-form first-moment propagator used as their oracle.

enum class BasisKind { Qubit, BosonFock, QubitXFock };

struct DensityMatrix {
    BasisKind basis = BasisKind::Qubit;
    int cutoff = 0;  // Fock levels per mode (unused for a bare qubit)
    int modes = 1;   // BosonFock only; 1 or 2
    Matrix rho;

    int dim() const { return static_cast<int>(rho.rows()); }
    void validate() const;  // Hermitian, unit trace within 1e-9, real diagonal

    static DensityMatrix qubit_ground();
    static DensityMatrix qubit_excited();
    static DensityMatrix boson_vacuum(int cutoff, int modes = 1);
    static DensityMatrix boson_coherent(Complex alpha, int cutoff);
    // qubit state (x) oscillator vacuum
    static DensityMatrix qubit_with_vacuum(const DensityMatrix& qubit, int cutoff);
    // spec strings: "ground", "excited", "vacuum", "coherent(re[,im])", or a
    // whitespace-separated matrix file "file:<path>" (Re Im pairs, row major)
    static DensityMatrix from_spec(const std::string& spec, BasisKind basis,
                                   int cutoff, int modes = 1);
};

struct EvolveConfig {
    double h = 1e-3;
    double t_end = 10.0;
    int cutoff = 10;
    double tol = 1e-9;        // local error bound per step near poles
    double min_step = 1e-7;   // smallest subdivision before giving up
    std::string initial;      // consumed by the CLI front end

    void validate() const;
};

struct BosonTrajectory {
    int modes = 1;
    std::vector<double> t;
    std::vector<Complex> a_mean;      // (steps+1) x modes, row-major
    std::vector<double> n_mean;       // photon number per mode
    std::vector<double> trace_error;  // |tr rho - 1| per step
    std::vector<double> min_eig;      // sampled and carried forward
    double max_trace_error = 0.0;     // reported, never renormalized away
    double min_eigenvalue = 0.0;      // most negative eigenvalue seen
    bool cutoff_warning = false;      // top Fock level exceeded 1e-6 of trace
    Matrix final_state;

    Complex a(int step, int mode = 0) const { return a_mean[step * modes + mode]; }
    double n(int step, int mode = 0) const { return n_mean[step * modes + mode]; }
    int steps() const { return static_cast<int>(t.size()) - 1; }
    void write_csv(std::ostream& out) const;
};

struct QubitTrajectory {
    std::vector<double> t;
    std::vector<Complex> sigma_minus;
    std::vector<double> sigma_z;
    std::vector<double> trace_error;
    std::vector<double> min_eig;
    double max_trace_error = 0.0;
    double min_eigenvalue = 0.0;
    Matrix final_state;

    int steps() const { return static_cast<int>(t.size()) - 1; }
    double excited_population(int step) const {
        return 0.5 * (sigma_z[step] + 1.0);
    }
    void write_csv(std::ostream& out) const;
};

// Time-local boson master equation with drive, decay and thermal terms,
// integrated by classical RK4 over cubically interpolated coefficients.
// Pole neighborhoods flagged in the track trigger step subdivision down to
// cfg.min_step; if the local error still exceeds cfg.tol the run aborts
// with PoleCrossingError.
BosonTrajectory evolve_boson_tlme(const CoefficientTrack& track,
                                  const EvolveConfig& cfg, const DensityMatrix& rho0);

// <a(t_n)> = V(t_n) a0 - i (V*Omega)(t_n): the linear-dynamics closed form.
std::vector<Vector> exact_first_moment(const GreensTrajectory& traj,
                                       const Drive& drive, const Vector& a0);

// Qubit transcription of the boson equation. With zero drive this is the
// exact spontaneous-emission master equation; with a drive it is the
// transcribed equation whose failure the reference solver exposes.
QubitTrajectory evolve_qubit_tlme(const CoefficientTrack& track,
                                  const EvolveConfig& cfg, const DensityMatrix& rho0);

struct WeakExcitationReport {
    double max_excited_population = 0.0;
    double threshold = 0.1;
    bool outside_weak_regime = false;
};

// The transcription is trustworthy only near the ground state; report how
// far a run strays from that regime.
WeakExcitationReport weak_excitation_flag(const QubitTrajectory& traj,
                                          double threshold = 0.1);

}  // namespace tlme

#endif  // TLME_EVOLVE_HPP
