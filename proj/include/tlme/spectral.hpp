#ifndef TLME_SPECTRAL_HPP
#define TLME_SPECTRAL_HPP

#include <functional>
#include <string>
#include <vector>

#include "tlme/types.hpp"

namespace tlme {

// Spectral densities of the subenvironments and the two kernels built from
// them: the dissipation kernel F(tau) (Fourier transform of J) and the noise
// kernel G(tau) (Fourier transform of J times the Bose occupation).
//
// Units: all rates and frequencies in units of a single reference rate,
// time in units of its inverse.

enum class SpectralKind { Lorentzian, Markovian, Tabulated };

// Sampled spectral density on an ascending frequency grid, interpolated
// linearly between nodes.
struct TabulatedDensity {
    std::vector<double> omega;
    std::vector<double> j;

    // Two whitespace-separated columns (omega, J); '#' starts a comment.
    static TabulatedDensity load(const std::string& path);
};

// One subenvironment, coupled to one subsystem. The rotating-frame center of
// the line sits at detuning - center_offset.
struct SubEnvironment {
    SpectralKind kind = SpectralKind::Lorentzian;
    double coupling = 1.0;       // Gamma, overall interaction strength
    double linewidth = 1.0;      // lambda (Lorentzian only)
    double detuning = 0.0;       // Delta
    double center_offset = 0.0;  // delta
    TabulatedDensity table;      // Tabulated only
    double temperature = 0.0;    // T >= 0
    double bose_shift = 2000.0;  // omega_0 entering the Bose factor
    double tabulated_tolerance = 1e-6;  // accepted relative quadrature error

    double center() const { return detuning - center_offset; }
};

struct SpectralModel {
    std::vector<SubEnvironment> envs;

    int dim() const { return static_cast<int>(envs.size()); }
    bool zero_temperature() const;
    // True when every kernel is a single complex exponential in tau.
    bool exponential_kernels() const;
    bool has_delta() const;
    void validate() const;

    static SpectralModel lorentzian(double coupling, double linewidth,
                                    double detuning, double center_offset,
                                    double temperature = 0.0,
                                    double bose_shift = 2000.0);
    static SpectralModel markovian(double coupling, double detuning = 0.0);
    static SpectralModel tabulated(TabulatedDensity table,
                                   double temperature = 0.0,
                                   double bose_shift = 2000.0);
};

// J(omega) of one subenvironment (smooth part; Markovian has none).
double spectral_density(const SubEnvironment& env, double omega);

// Bose-Einstein occupation 1/(exp((omega + omega_0)/T) - 1); zero at T = 0.
double bose_occupation(const SubEnvironment& env, double omega);

// F(tau) for tau >= 0, closed form where available (Lorentzian), Fourier
// quadrature otherwise. Markovian delta components are not representable
// pointwise and are excluded; see KernelSampler::delta_weight.
Matrix dissipation_kernel(const SpectralModel& model, double tau);

// Same integral evaluated by oscillatory panel quadrature with asymptotic
// tail corrections. Reference route for the closed forms; also the
// production route for tabulated densities.
Matrix dissipation_kernel_quadrature(const SpectralModel& model, double tau);

// G(tau) for any real tau, by quadrature. Identically zero at T = 0.
Matrix noise_kernel(const SpectralModel& model, double tau);

// G on the uniform grid tau_k = k h, k = 0..count. Same integral as
// noise_kernel, evaluated over a fixed panel set with per-node phase
// recursion plus a Filon far region, so a whole grid costs little more
// than a handful of single calls. Negative lags follow from G(-tau) =
// adjoint(G(tau)).
std::vector<Matrix> noise_kernel_grid(const SpectralModel& model, double h, int count);

// Immutable kernel evaluator, safe to share across threads.
class KernelSampler {
public:
    explicit KernelSampler(SpectralModel model);

    int dim() const { return model_.dim(); }
    const SpectralModel& model() const { return model_; }
    // True when F comes from closed forms rather than quadrature.
    bool analytic() const;
    bool zero_temperature() const { return model_.zero_temperature(); }

    // Delta-kernel weights (diagonal Gamma of Markovian components). The
    // convolution of the delta part with a trajectory V contributes
    // (1/2) * delta_weight * V(t) at the boundary.
    bool has_delta() const { return model_.has_delta(); }
    Matrix delta_weight() const;

    Matrix dissipation(double tau) const;  // F(tau), tau >= 0
    Matrix noise(double tau) const;        // G(tau), any tau

private:
    SpectralModel model_;
};

}  // namespace tlme

#endif  // TLME_SPECTRAL_HPP
