#include "tlme/spectral.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <functional>
#include <limits>
#include <sstream>
#include <vector>

namespace tlme {

namespace {

using LD = long double;
using CLD = std::complex<LD>;

// 24-point Gauss-Legendre rule on [-1, 1].
const LD kGlNode[24] = {
    -0.9951872199970213601799974L, -0.974728555971309498198392L,
    -0.938274552002732758523649L,  -0.8864155270044010342131543L,
    -0.8200019859739029219539499L, -0.7401241915785543642438281L,
    -0.6480936519369755692524958L, -0.5454214713888395356583756L,
    -0.4337935076260451384870842L, -0.3150426796961633743867933L,
    -0.1911188674736163091586398L, -0.06405689286260562608504308L,
    0.06405689286260562608504308L,  0.1911188674736163091586398L,
    0.3150426796961633743867933L,   0.4337935076260451384870842L,
    0.5454214713888395356583756L,   0.6480936519369755692524958L,
    0.7401241915785543642438281L,   0.8200019859739029219539499L,
    0.8864155270044010342131543L,   0.938274552002732758523649L,
    0.974728555971309498198392L,    0.9951872199970213601799974L};
const LD kGlWeight[24] = {
    0.01234122979998719954680567L, 0.02853138862893366318130782L,
    0.04427743881741980616860275L, 0.05929858491543678074636776L,
    0.07334648141108030573403362L, 0.0861901615319532759171852L,
    0.09761865210411388826988066L, 0.1074442701159656347825773L,
    0.1155056680537256013533445L,  0.1216704729278033912044632L,
    0.1258374563468282961213754L,  0.1279381953467521569740562L,
    0.1279381953467521569740562L,  0.1258374563468282961213754L,
    0.1216704729278033912044632L,  0.1155056680537256013533445L,
    0.1074442701159656347825773L,  0.09761865210411388826988066L,
    0.0861901615319532759171852L,  0.07334648141108030573403362L,
    0.05929858491543678074636776L, 0.04427743881741980616860275L,
    0.02853138862893366318130782L, 0.01234122979998719954680567L};

struct Kahan {
    LD sum = 0.0L, carry = 0.0L;
    void add(LD x) {
        LD y = x - carry;
        LD t = sum + y;
        carry = (t - sum) - y;
        sum = t;
    }
};

template <class F>
LD gl24(F&& f, LD a, LD b) {
    const LD mid = 0.5L * (a + b), half = 0.5L * (b - a);
    Kahan acc;
    for (int q = 0; q < 24; ++q) acc.add(kGlWeight[q] * f(mid + half * kGlNode[q]));
    return acc.sum * half;
}

// ------------------------------------------------------------------
// Reference Fourier quadrature of the Lorentzian line
//
// Integral of (coupling/2pi) * lam^2 / ((w - c)^2 + lam^2) * exp(-i w tau)
// over the real line. After centering, the even part reduces to a cosine
// integral over [0, W]; the remainder beyond W is summed by repeated
// integration by parts, which gains a factor ~1/(W tau) per term. With
// W = max(50 lam, 50/tau) the remainder is far below double roundoff for
// tau lam <= ~30, so the quadrature stays pointwise-accurate even where
// the kernel has decayed by many orders.
// ------------------------------------------------------------------

CLD lorentzian_tail_ibp(LD lam, LD w, LD tau) {
    // integral_W^inf lam^2/(x^2+lam^2) exp(-i x tau) dx
    constexpr int kTerms = 16;
    const CLD i_unit(0.0L, 1.0L);
    const CLD inv_itau = 1.0L / (i_unit * tau);
    const CLD pm = 1.0L / (CLD(w, -lam));  // 1/(W - i lam)
    const CLD pp = 1.0L / (CLD(w, lam));   // 1/(W + i lam)
    CLD pm_pow = pm, pp_pow = pp;
    CLD tau_pow = inv_itau;
    LD factorial = 1.0L, sign = 1.0L;
    CLD series(0.0L, 0.0L);
    for (int k = 0; k < kTerms; ++k) {
        const CLD deriv = (lam / (2.0L * i_unit)) * sign * factorial * (pm_pow - pp_pow);
        series += deriv * tau_pow;
        pm_pow *= pm;
        pp_pow *= pp;
        tau_pow *= inv_itau;
        factorial *= static_cast<LD>(k + 1);
        sign = -sign;
    }
    const CLD phase(std::cos(-w * tau), std::sin(-w * tau));
    return phase * series;
}

Complex lorentzian_fourier(double coupling, double lam_d, double center, double tau_d) {
    if (coupling == 0.0) return Complex(0.0, 0.0);
    const LD lam = lam_d;
    const LD tau = tau_d;
    const LD w_end = std::max<LD>(50.0L * lam, tau > 0.0L ? 50.0L / tau : 0.0L);

    // Panels over [0, W]: refined near the peak, capped by the oscillation
    // period away from it.
    Kahan acc;
    LD x = 0.0L;
    const LD osc_cap = tau > 0.0L ? static_cast<LD>(M_PIl) / (2.0L * tau)
                                  : std::numeric_limits<LD>::infinity();
    while (x < w_end) {
        LD len = std::max(0.25L * lam, 0.5L * x);
        len = std::min(len, osc_cap);
        len = std::min(len, w_end - x);
        const LD a = x, b = x + len;
        acc.add(gl24(
            [&](LD u) { return lam * lam / (u * u + lam * lam) * std::cos(u * tau); },
            a, b));
        x = b;
    }

    LD tail;
    if (tau > 0.0L) {
        tail = 2.0L * std::real(lorentzian_tail_ibp(lam, w_end, tau));
    } else {
        // integral_W^inf lam^2/(x^2+lam^2) dx = lam * atan(lam/W)
        tail = 2.0L * lam * std::atan(lam / w_end);
    }

    const LD core = 2.0L * acc.sum + tail;
    const LD pref = static_cast<LD>(coupling) / (2.0L * static_cast<LD>(M_PIl));
    const LD phase_arg = -static_cast<LD>(center) * tau;
    const CLD value = pref * core * CLD(std::cos(phase_arg), std::sin(phase_arg));
    return Complex(static_cast<double>(value.real()), static_cast<double>(value.imag()));
}

// ------------------------------------------------------------------
// Adaptive Gauss-Kronrod (7-15) for one-off noise-kernel integrals
// ------------------------------------------------------------------

const double kGkNode[8] = {0.991455371120813, 0.949107912342759, 0.864864423359769,
                           0.741531185599394, 0.586087235467691, 0.405845151377397,
                           0.207784955007898, 0.0};
const double kGkWeight[8] = {0.022935322010529, 0.063092092629979, 0.104790010322250,
                             0.140653259715525, 0.169004726639267, 0.190350578064785,
                             0.204432940075298, 0.209482141084728};
const double kGaussWeight[4] = {0.129484966168870, 0.279705391489277,
                                0.381830050505119, 0.417959183673469};

Complex gk15(const std::function<Complex(double)>& f, double a, double b, double& err) {
    const double mid = 0.5 * (a + b), half = 0.5 * (b - a);
    Complex fk[8];
    Complex kron(0.0, 0.0), gauss(0.0, 0.0);
    for (int q = 0; q < 8; ++q) {
        if (q == 7) {
            fk[q] = f(mid);
            kron += kGkWeight[q] * fk[q];
            gauss += kGaussWeight[3] * fk[q];
        } else {
            const Complex lo = f(mid - half * kGkNode[q]);
            const Complex hi = f(mid + half * kGkNode[q]);
            kron += kGkWeight[q] * (lo + hi);
            if (q % 2 == 1) gauss += kGaussWeight[q / 2] * (lo + hi);
        }
    }
    kron *= half;
    gauss *= half;
    err = std::abs(kron - gauss);
    return kron;
}

struct Panel {
    double a, b, err;
    Complex val;
};

Complex integrate_adaptive(const std::function<Complex(double)>& f,
                           std::vector<double> breakpoints, double abs_tol,
                           int max_panels = 6000) {
    std::sort(breakpoints.begin(), breakpoints.end());
    breakpoints.erase(std::unique(breakpoints.begin(), breakpoints.end()),
                      breakpoints.end());
    std::vector<Panel> panels;
    for (size_t i = 0; i + 1 < breakpoints.size(); ++i) {
        if (breakpoints[i + 1] <= breakpoints[i]) continue;
        Panel p{breakpoints[i], breakpoints[i + 1], 0.0, Complex(0, 0)};
        p.val = gk15(f, p.a, p.b, p.err);
        panels.push_back(p);
    }
    auto total_err = [&] {
        double e = 0.0;
        for (const auto& p : panels) e += p.err;
        return e;
    };
    while (total_err() > abs_tol && static_cast<int>(panels.size()) < max_panels) {
        size_t worst = 0;
        for (size_t i = 1; i < panels.size(); ++i)
            if (panels[i].err > panels[worst].err) worst = i;
        Panel p = panels[worst];
        const double mid = 0.5 * (p.a + p.b);
        if (mid <= p.a || mid >= p.b) break;  // width exhausted
        Panel left{p.a, mid, 0.0, Complex(0, 0)}, right{mid, p.b, 0.0, Complex(0, 0)};
        left.val = gk15(f, left.a, left.b, left.err);
        right.val = gk15(f, right.a, right.b, right.err);
        panels[worst] = left;
        panels.push_back(right);
    }
    Complex total(0.0, 0.0);
    for (const auto& p : panels) total += p.val;
    return total;
}

// ------------------------------------------------------------------
// Filon moments: integral_0^h u^k exp(-i u tau) du for k = 0..3
// ------------------------------------------------------------------

void filon_moments(double h, double tau, Complex e[4]) {
    const double ht = h * tau;
    if (std::abs(ht) < 0.5) {
        // Taylor series in (-i tau), term m: (-i tau)^m h^(k+m+1) / (m! (k+m+1))
        for (int k = 0; k < 4; ++k) {
            Complex term = std::pow(h, k + 1) / static_cast<double>(k + 1);
            Complex sum = term;
            Complex factor(0.0, 0.0);
            Complex m_i_tau(0.0, -tau);
            for (int m = 1; m < 30; ++m) {
                term *= m_i_tau * h / static_cast<double>(m);
                // correct the k-dependent denominator ratio (k+m)/(k+m+1)
                term *= static_cast<double>(k + m) / static_cast<double>(k + m + 1);
                sum += term;
                if (std::abs(term) < 1e-22 * std::abs(sum)) break;
            }
            e[k] = sum;
            (void)factor;
        }
        return;
    }
    const Complex i_tau(0.0, tau);
    const Complex ph = std::exp(Complex(0.0, -ht));
    e[0] = (1.0 - ph) / i_tau;
    double hk = 1.0;
    for (int k = 1; k < 4; ++k) {
        hk *= h;
        e[k] = (static_cast<double>(k) * e[k - 1] - hk * ph) / i_tau;
    }
}

// Piecewise-linear Fourier transform of tabulated data over its support.
Complex filon_linear(const std::vector<double>& omega, const std::vector<double>& j,
                     double tau) {
    Complex total(0.0, 0.0);
    for (size_t i = 0; i + 1 < omega.size(); ++i) {
        const double h = omega[i + 1] - omega[i];
        if (h <= 0.0) continue;
        const double a = j[i];
        const double b = (j[i + 1] - j[i]) / h;
        Complex e[4];
        filon_moments(h, tau, e);
        const double arg = -omega[i] * tau;
        total += Complex(std::cos(arg), std::sin(arg)) * (a * e[0] + b * e[1]);
    }
    return total;
}

// Cubic-Hermite Filon segment: f given by values/derivatives at both ends.
Complex filon_cubic_segment(double x0, double h, double f0, double f1, double d0,
                            double d1, double tau) {
    // Hermite coefficients of f(x0 + u) = c0 + c1 u + c2 u^2 + c3 u^3
    const double c0 = f0;
    const double c1 = d0;
    const double c2 = (3.0 * (f1 - f0) / h - 2.0 * d0 - d1) / h;
    const double c3 = (2.0 * (f0 - f1) / h + d0 + d1) / (h * h);
    Complex e[4];
    filon_moments(h, tau, e);
    const double arg = -x0 * tau;
    return Complex(std::cos(arg), std::sin(arg)) *
           (c0 * e[0] + c1 * e[1] + c2 * e[2] + c3 * e[3]);
}

// ------------------------------------------------------------------
// Bose-weighted integrand helpers
// ------------------------------------------------------------------

double lorentzian_j(double coupling, double lam, double center, double omega) {
    const double d = omega - center;
    return coupling / (2.0 * M_PI) * lam * lam / (d * d + lam * lam);
}

double lorentzian_j_deriv(double coupling, double lam, double center, double omega) {
    const double d = omega - center;
    const double den = d * d + lam * lam;
    return -coupling / (2.0 * M_PI) * lam * lam * 2.0 * d / (den * den);
}

double bose_n(double temperature, double bose_shift, double omega) {
    if (temperature <= 0.0) return 0.0;
    const double arg = (omega + bose_shift) / temperature;
    if (arg > 700.0) return 0.0;
    return 1.0 / std::expm1(arg);
}

double bose_n_deriv(double temperature, double bose_shift, double omega) {
    if (temperature <= 0.0) return 0.0;
    const double arg = (omega + bose_shift) / temperature;
    if (arg > 700.0) return 0.0;
    const double n = 1.0 / std::expm1(arg);
    return -std::exp(arg) * n * n / temperature;
}

struct NoiseWindow {
    double left, right;
};

// Window for the thermal integral: the stated half-width around the line
// center, clamped away from the Bose pole on the left and extended on the
// right until the remaining thermal mass is negligible. Deliberately
// independent of tau so that single calls and grid evaluation integrate
// the same band.
NoiseWindow noise_window(const SubEnvironment& env, double abs_tol) {
    const double c = env.center();
    const double lam = env.kind == SpectralKind::Lorentzian ? env.linewidth : 1.0;
    const double w0 = 50.0 * lam;

    const double pole_guard = -0.9 * env.bose_shift;
    if (c - w0 < pole_guard) {
        throw ConfigError(
            "noise kernel window reaches the Bose-factor pole; increase bose_shift");
    }
    const double left = c - w0;

    double right = c + w0;
    const double cap = c + 1e6 * lam;
    while (right < cap) {
        const double j = lorentzian_j(env.coupling, lam, c, right);
        const double n = bose_n(env.temperature, env.bose_shift, right);
        if (j * n * std::max(right - c, env.temperature) < 0.05 * abs_tol) break;
        right *= 1.4;
    }
    return {left, right};
}

// One-off adaptive evaluation of a single Lorentzian thermal integral.
Complex lorentzian_noise_adaptive(const SubEnvironment& env, double tau) {
    const double scale = env.coupling * env.linewidth / 2.0;
    const double abs_tol = std::max(1e-10 * scale, 1e-14);
    const NoiseWindow win = noise_window(env, abs_tol);
    const double c = env.center();
    const double lam = env.linewidth;

    std::vector<double> bps{win.left, win.right};
    for (double s = 0.5 * lam; s < std::max(c - win.left, win.right - c); s *= 2.0) {
        if (c - s > win.left) bps.push_back(c - s);
        if (c + s < win.right) bps.push_back(c + s);
    }
    bps.push_back(std::clamp(c, win.left, win.right));
    // pre-split long spans so each panel sees at most ~one oscillation period
    if (tau != 0.0) {
        std::sort(bps.begin(), bps.end());
        std::vector<double> refined;
        const double period = 2.0 * M_PI / std::abs(tau);
        for (size_t i = 0; i + 1 < bps.size(); ++i) {
            refined.push_back(bps[i]);
            const double len = bps[i + 1] - bps[i];
            const int extra = static_cast<int>(len / period);
            for (int k = 1; k <= extra && k < 4000; ++k)
                refined.push_back(bps[i] + len * k / (extra + 1));
        }
        refined.push_back(bps.back());
        bps.swap(refined);
    }

    auto integrand = [&](double w) {
        const double jn = lorentzian_j(env.coupling, lam, c, w) *
                          bose_n(env.temperature, env.bose_shift, w);
        const double arg = -w * tau;
        return Complex(jn * std::cos(arg), jn * std::sin(arg));
    };
    return integrate_adaptive(integrand, bps, abs_tol);
}

Complex tabulated_noise_adaptive(const SubEnvironment& env, double tau) {
    const auto& t = env.table;
    std::vector<double> bps(t.omega.begin(), t.omega.end());
    if (tau != 0.0) {
        std::vector<double> refined;
        const double period = 2.0 * M_PI / std::abs(tau);
        for (size_t i = 0; i + 1 < bps.size(); ++i) {
            refined.push_back(bps[i]);
            const double len = bps[i + 1] - bps[i];
            const int extra = static_cast<int>(len / period);
            for (int k = 1; k <= extra && k < 4000; ++k)
                refined.push_back(bps[i] + len * k / (extra + 1));
        }
        refined.push_back(bps.back());
        bps.swap(refined);
    }
    auto interp = [&](double w) {
        auto it = std::upper_bound(t.omega.begin(), t.omega.end(), w);
        if (it == t.omega.begin() || it == t.omega.end()) return 0.0;
        const size_t i = static_cast<size_t>(it - t.omega.begin()) - 1;
        const double frac = (w - t.omega[i]) / (t.omega[i + 1] - t.omega[i]);
        return t.j[i] + frac * (t.j[i + 1] - t.j[i]);
    };
    double scale = 0.0;
    for (size_t i = 0; i + 1 < t.omega.size(); ++i)
        scale += 0.5 * (t.j[i] + t.j[i + 1]) * (t.omega[i + 1] - t.omega[i]);
    auto integrand = [&](double w) {
        const double jn = interp(w) * bose_n(env.temperature, env.bose_shift, w);
        const double arg = -w * tau;
        return Complex(jn * std::cos(arg), jn * std::sin(arg));
    };
    return integrate_adaptive(integrand, bps, std::max(1e-10 * scale, 1e-14));
}

Complex env_noise(const SubEnvironment& env, double tau) {
    if (env.temperature <= 0.0 || env.coupling == 0.0) return Complex(0.0, 0.0);
    if (tau < 0.0) return std::conj(env_noise(env, -tau));
    switch (env.kind) {
        case SpectralKind::Lorentzian:
            return lorentzian_noise_adaptive(env, tau);
        case SpectralKind::Tabulated:
            return tabulated_noise_adaptive(env, tau);
        case SpectralKind::Markovian:
            throw ConfigError("Markovian model supports zero temperature only");
    }
    return Complex(0.0, 0.0);
}

// Grid evaluation of one Lorentzian thermal integral at tau_k = k h.
// Peak region: fixed Gauss-Legendre panels whose node phases advance by a
// constant rotation per grid step. Wings: cubic-Hermite Filon segments,
// exact in the oscillation for every lag.
void lorentzian_noise_grid(const SubEnvironment& env, double h, int count,
                           std::vector<Complex>& out) {
    const double scale = env.coupling * env.linewidth / 2.0;
    const double abs_tol = std::max(1e-10 * scale, 1e-14);
    const NoiseWindow win = noise_window(env, abs_tol);
    const double c = env.center();
    const double lam = env.linewidth;
    const double tau_max = h * count;

    auto phi = [&](double w) {
        return lorentzian_j(env.coupling, lam, c, w) *
               bose_n(env.temperature, env.bose_shift, w);
    };
    auto phi_deriv = [&](double w) {
        return lorentzian_j_deriv(env.coupling, lam, c, w) *
                   bose_n(env.temperature, env.bose_shift, w) +
               lorentzian_j(env.coupling, lam, c, w) *
                   bose_n_deriv(env.temperature, env.bose_shift, w);
    };

    const double near_lo = std::max(win.left, c - 16.0 * lam);
    const double near_hi = std::min(win.right, c + 16.0 * lam);

    // peak-region nodes
    std::vector<double> node_x;
    std::vector<double> node_a;
    {
        const double period_cap =
            tau_max > 0.0 ? 1.6 * 2.0 * M_PI / tau_max : std::numeric_limits<double>::infinity();
        const double t_cap = env.temperature > 0.0 ? env.temperature / 2.0
                                                   : std::numeric_limits<double>::infinity();
        double x = near_lo;
        while (x < near_hi) {
            double len = std::max(lam / 4.0, std::abs(x - c) / 4.0);
            len = std::min({len, period_cap, t_cap, near_hi - x});
            const double mid = x + 0.5 * len, half = 0.5 * len;
            for (int q = 0; q < 24; ++q) {
                const double xq = mid + half * static_cast<double>(kGlNode[q]);
                node_x.push_back(xq);
                node_a.push_back(static_cast<double>(kGlWeight[q]) * half * phi(xq));
            }
            x += len;
        }
    }

    // wing segments
    struct Segment {
        double x0, h, f0, f1, d0, d1;
    };
    std::vector<Segment> segments;
    auto add_wing = [&](double from, double to, bool outward_right) {
        if (to <= from) return;
        double x = outward_right ? from : to;
        while (true) {
            const double dist = std::max(std::abs(x - c), 16.0 * lam);
            double len = 0.01 * dist;
            if (env.temperature > 0.0) len = std::min(len, env.temperature / 3.0);
            if (outward_right) {
                len = std::min(len, to - x);
                if (len <= 0.0) break;
                segments.push_back({x, len, phi(x), phi(x + len), phi_deriv(x),
                                    phi_deriv(x + len)});
                x += len;
                if (x >= to) break;
            } else {
                len = std::min(len, x - from);
                if (len <= 0.0) break;
                segments.push_back({x - len, len, phi(x - len), phi(x),
                                    phi_deriv(x - len), phi_deriv(x)});
                x -= len;
                if (x <= from) break;
            }
        }
    };
    add_wing(win.left, near_lo, false);
    add_wing(near_hi, win.right, true);

    // accumulate: peak nodes via phase recursion, wings via Filon
    const size_t nq = node_x.size();
    std::vector<Complex> phase(nq, Complex(1.0, 0.0));
    std::vector<Complex> rot(nq);
    for (size_t q = 0; q < nq; ++q) rot[q] = std::exp(Complex(0.0, -node_x[q] * h));
    for (int k = 0; k <= count; ++k) {
        const double tau = k * h;
        if (k % 256 == 0) {
            for (size_t q = 0; q < nq; ++q)
                phase[q] = std::exp(Complex(0.0, -node_x[q] * tau));
        }
        Complex sum(0.0, 0.0);
        for (size_t q = 0; q < nq; ++q) sum += node_a[q] * phase[q];
        for (const auto& s : segments)
            sum += filon_cubic_segment(s.x0, s.h, s.f0, s.f1, s.d0, s.d1, tau);
        out[k] += sum;
        for (size_t q = 0; q < nq; ++q) phase[q] *= rot[q];
    }
}

Complex env_dissipation_closed(const SubEnvironment& env, double tau) {
    switch (env.kind) {
        case SpectralKind::Lorentzian: {
            const double amp = env.coupling * env.linewidth / 2.0;
            return amp * std::exp(Complex(-env.linewidth * tau, -env.center() * tau));
        }
        case SpectralKind::Tabulated:
            return filon_linear(env.table.omega, env.table.j, tau);
        case SpectralKind::Markovian:
            return Complex(0.0, 0.0);  // delta component handled separately
    }
    return Complex(0.0, 0.0);
}

Complex env_dissipation_quadrature(const SubEnvironment& env, double tau) {
    switch (env.kind) {
        case SpectralKind::Lorentzian:
            return lorentzian_fourier(env.coupling, env.linewidth, env.center(), tau);
        case SpectralKind::Tabulated:
            return filon_linear(env.table.omega, env.table.j, tau);
        case SpectralKind::Markovian:
            throw ConfigError(
                "Markovian kernel is a delta in time and has no pointwise sampler");
    }
    return Complex(0.0, 0.0);
}

}  // namespace

// ------------------------------------------------------------------

TabulatedDensity TabulatedDensity::load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open spectral density file: " + path);
    TabulatedDensity t;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        std::istringstream ls(line);
        double w, j;
        if (!(ls >> w)) continue;  // blank or comment-only line
        if (!(ls >> j))
            throw ConfigError("spectral density file " + path + ": line " +
                              std::to_string(lineno) + " needs two columns");
        t.omega.push_back(w);
        t.j.push_back(j);
    }
    if (t.omega.size() < 3)
        throw ConfigError("spectral density file " + path + ": need at least 3 rows");
    return t;
}

bool SpectralModel::zero_temperature() const {
    for (const auto& e : envs)
        if (e.temperature > 0.0) return false;
    return true;
}

bool SpectralModel::exponential_kernels() const {
    for (const auto& e : envs)
        if (e.kind == SpectralKind::Tabulated) return false;
    return true;
}

bool SpectralModel::has_delta() const {
    for (const auto& e : envs)
        if (e.kind == SpectralKind::Markovian && e.coupling != 0.0) return true;
    return false;
}

void SpectralModel::validate() const {
    if (envs.empty()) throw ConfigError("spectral model needs at least one subenvironment");
    for (const auto& e : envs) {
        if (e.coupling < 0.0) throw ConfigError("coupling rate must be >= 0");
        if (e.temperature < 0.0) throw ConfigError("temperature must be >= 0");
        if (e.temperature > 0.0 && e.bose_shift <= 0.0)
            throw ConfigError("bose_shift must be positive at finite temperature");
        switch (e.kind) {
            case SpectralKind::Lorentzian:
                if (e.linewidth <= 0.0)
                    throw ConfigError("Lorentzian linewidth must be positive");
                break;
            case SpectralKind::Markovian:
                if (e.temperature > 0.0)
                    throw ConfigError("Markovian model supports zero temperature only");
                break;
            case SpectralKind::Tabulated: {
                const auto& t = e.table;
                if (t.omega.size() < 3 || t.omega.size() != t.j.size())
                    throw ConfigError("tabulated density needs >= 3 (omega, J) rows");
                for (size_t i = 0; i + 1 < t.omega.size(); ++i)
                    if (t.omega[i + 1] <= t.omega[i])
                        throw ConfigError("tabulated frequencies must be ascending");
                for (double j : t.j)
                    if (j < 0.0) throw ConfigError("tabulated J(omega) must be >= 0");
                if (e.temperature > 0.0 && t.omega.front() + e.bose_shift <= 0.0)
                    throw ConfigError(
                        "tabulated grid extends past the Bose pole; increase bose_shift");
                // Linear interpolation error estimate from second differences;
                // reject grids whose Fourier integrals cannot meet tolerance.
                double err = 0.0, mass = 0.0;
                for (size_t i = 1; i + 1 < t.omega.size(); ++i) {
                    const double hl = t.omega[i] - t.omega[i - 1];
                    const double hr = t.omega[i + 1] - t.omega[i];
                    const double d2 = 2.0 *
                                      ((t.j[i + 1] - t.j[i]) / hr - (t.j[i] - t.j[i - 1]) / hl) /
                                      (hl + hr);
                    err += std::abs(d2) * std::pow(0.5 * (hl + hr), 3) / 8.0;
                }
                for (size_t i = 0; i + 1 < t.omega.size(); ++i)
                    mass += 0.5 * (t.j[i] + t.j[i + 1]) * (t.omega[i + 1] - t.omega[i]);
                if (mass > 0.0 && err > e.tabulated_tolerance * mass)
                    throw ConfigError(
                        "tabulated grid too coarse: estimated quadrature error " +
                        std::to_string(err / mass) + " exceeds tolerance");
                break;
            }
        }
    }
}

SpectralModel SpectralModel::lorentzian(double coupling, double linewidth,
                                        double detuning, double center_offset,
                                        double temperature, double bose_shift) {
    SubEnvironment e;
    e.kind = SpectralKind::Lorentzian;
    e.coupling = coupling;
    e.linewidth = linewidth;
    e.detuning = detuning;
    e.center_offset = center_offset;
    e.temperature = temperature;
    e.bose_shift = bose_shift;
    SpectralModel m{{e}};
    m.validate();
    return m;
}

SpectralModel SpectralModel::markovian(double coupling, double detuning) {
    SubEnvironment e;
    e.kind = SpectralKind::Markovian;
    e.coupling = coupling;
    e.detuning = detuning;
    SpectralModel m{{e}};
    m.validate();
    return m;
}

SpectralModel SpectralModel::tabulated(TabulatedDensity table, double temperature,
                                       double bose_shift) {
    SubEnvironment e;
    e.kind = SpectralKind::Tabulated;
    e.table = std::move(table);
    e.temperature = temperature;
    e.bose_shift = bose_shift;
    SpectralModel m{{e}};
    m.validate();
    return m;
}

double spectral_density(const SubEnvironment& env, double omega) {
    switch (env.kind) {
        case SpectralKind::Lorentzian:
            return lorentzian_j(env.coupling, env.linewidth, env.center(), omega);
        case SpectralKind::Markovian:
            return env.coupling / (2.0 * M_PI);
        case SpectralKind::Tabulated: {
            const auto& t = env.table;
            auto it = std::upper_bound(t.omega.begin(), t.omega.end(), omega);
            if (it == t.omega.begin() || it == t.omega.end()) return 0.0;
            const size_t i = static_cast<size_t>(it - t.omega.begin()) - 1;
            const double frac = (omega - t.omega[i]) / (t.omega[i + 1] - t.omega[i]);
            return t.j[i] + frac * (t.j[i + 1] - t.j[i]);
        }
    }
    return 0.0;
}

double bose_occupation(const SubEnvironment& env, double omega) {
    if (env.temperature <= 0.0) return 0.0;
    if (omega + env.bose_shift <= 0.0)
        throw ConfigError("Bose factor at nonpositive shifted frequency; increase bose_shift");
    return bose_n(env.temperature, env.bose_shift, omega);
}

Matrix dissipation_kernel(const SpectralModel& model, double tau) {
    if (tau < 0.0) throw ConfigError("dissipation kernel requires tau >= 0");
    Matrix f = Matrix::Zero(model.dim(), model.dim());
    for (int j = 0; j < model.dim(); ++j)
        f(j, j) = env_dissipation_closed(model.envs[j], tau);
    return f;
}

Matrix dissipation_kernel_quadrature(const SpectralModel& model, double tau) {
    if (tau < 0.0) throw ConfigError("dissipation kernel requires tau >= 0");
    Matrix f = Matrix::Zero(model.dim(), model.dim());
    for (int j = 0; j < model.dim(); ++j)
        f(j, j) = env_dissipation_quadrature(model.envs[j], tau);
    return f;
}

Matrix noise_kernel(const SpectralModel& model, double tau) {
    Matrix g = Matrix::Zero(model.dim(), model.dim());
    for (int j = 0; j < model.dim(); ++j) g(j, j) = env_noise(model.envs[j], tau);
    return g;
}

std::vector<Matrix> noise_kernel_grid(const SpectralModel& model, double h, int count) {
    if (h <= 0.0 || count < 0) throw ConfigError("noise grid needs h > 0, count >= 0");
    const Matrix zero = Matrix::Zero(model.dim(), model.dim());
    std::vector<Matrix> grid(count + 1, zero);
    for (int j = 0; j < model.dim(); ++j) {
        const auto& env = model.envs[j];
        if (env.temperature <= 0.0 || env.coupling == 0.0) continue;
        if (env.kind == SpectralKind::Lorentzian) {
            std::vector<Complex> vals(count + 1, Complex(0.0, 0.0));
            lorentzian_noise_grid(env, h, count, vals);
            for (int k = 0; k <= count; ++k) grid[k](j, j) += vals[k];
        } else {
            for (int k = 0; k <= count; ++k) grid[k](j, j) += env_noise(env, k * h);
        }
    }
    return grid;
}

KernelSampler::KernelSampler(SpectralModel model) : model_(std::move(model)) {
    model_.validate();
}

bool KernelSampler::analytic() const {
    for (const auto& e : model_.envs)
        if (e.kind == SpectralKind::Tabulated) return false;
    return true;
}

Matrix KernelSampler::delta_weight() const {
    Matrix w = Matrix::Zero(dim(), dim());
    for (int j = 0; j < dim(); ++j)
        if (model_.envs[j].kind == SpectralKind::Markovian)
            w(j, j) = model_.envs[j].coupling;
    return w;
}

Matrix KernelSampler::dissipation(double tau) const {
    return dissipation_kernel(model_, tau);
}

Matrix KernelSampler::noise(double tau) const { return noise_kernel(model_, tau); }

}  // namespace tlme
