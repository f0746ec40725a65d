#ifndef TLME_TESTS_ORACLES_HPP
#define TLME_TESTS_ORACLES_HPP

// Test-side reference integrators, kept independent of the quadrature code
// in the library (adaptive Simpson here, Gauss panels there).

#include <cmath>
#include <complex>
#include <functional>

namespace oracle {

using Complex = std::complex<double>;

namespace detail {

template <class F>
Complex simpson_step(F& f, double a, double b, Complex fa, Complex fm, Complex fb,
                     Complex whole, double tol, int depth) {
    const double m = 0.5 * (a + b);
    const double lm = 0.5 * (a + m), rm = 0.5 * (m + b);
    const Complex flm = f(lm), frm = f(rm);
    const Complex left = (b - a) / 12.0 * (fa + 4.0 * flm + fm);
    const Complex right = (b - a) / 12.0 * (fm + 4.0 * frm + fb);
    const Complex delta = left + right - whole;
    if (depth <= 0 || std::abs(delta) <= 15.0 * tol)
        return left + right + delta / 15.0;
    return simpson_step(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1) +
           simpson_step(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1);
}

}  // namespace detail

// Adaptive Simpson on [a, b].
template <class F>
Complex integrate(F f, double a, double b, double tol = 1e-10, int depth = 48) {
    const Complex fa = f(a), fb = f(b), fm = f(0.5 * (a + b));
    const Complex whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    return detail::simpson_step(f, a, b, fa, fm, fb, whole, tol, depth);
}

// Oscillation-aware variant: splits [a, b] into sub-ranges of at most one
// period of exp(-i omega tau) before adapting.
template <class F>
Complex integrate_oscillatory(F f, double a, double b, double tau,
                              double tol = 1e-10) {
    if (tau == 0.0) return integrate(f, a, b, tol);
    const double period = 2.0 * M_PI / std::abs(tau);
    const int chunks = std::max(1, static_cast<int>((b - a) / period) + 1);
    Complex total(0.0, 0.0);
    const double step = (b - a) / chunks;
    for (int i = 0; i < chunks; ++i)
        total += integrate(f, a + i * step, a + (i + 1) * step, tol / chunks);
    return total;
}

}  // namespace oracle

#endif  // TLME_TESTS_ORACLES_HPP
