#include "doctest.h"

#include <cmath>
#include <complex>
#include <sstream>
#include <vector>

#include <unsupported/Eigen/MatrixFunctions>

#include "tlme/volterra.hpp"
#include "oracles.hpp"

using namespace tlme;

namespace {

// Closed form for the benchmark kernel F(tau) = exp(-tau) (coupling 2,
// linewidth 1, no detuning): V'' + V' + V = 0 with V(0)=1, V'(0)=0.
double benchmark_v(double t) {
    const double nu = std::sqrt(3.0) / 2.0;
    return std::exp(-0.5 * t) * (std::cos(nu * t) + std::sin(nu * t) / (2.0 * nu));
}

double benchmark_dv(double t) {
    const double nu = std::sqrt(3.0) / 2.0;
    return -std::exp(-0.5 * t) * std::sin(nu * t) / nu;
}

}  // namespace

TEST_CASE("benchmark closed form satisfies the memory equation (substitution)") {
    for (double t : {0.4, 1.3, 2.9, 6.0}) {
        const Complex conv = oracle::integrate(
            [&](double s) {
                return Complex(std::exp(-(t - s)) * benchmark_v(s), 0.0);
            },
            0.0, t, 1e-12);
        const Complex residual = Complex(benchmark_dv(t), 0.0) + conv;
        CHECK(std::abs(residual) < 1e-9);
    }
}

TEST_CASE("general solver reproduces the benchmark closed form") {
    auto model = SpectralModel::lorentzian(2.0, 1.0, 0.0, 0.0);
    KernelSampler kernel(model);
    const double h = 1e-3;
    const int steps = 20000;
    auto traj = solve_volterra_general(CouplingMatrix::single(0.0), kernel, h, steps);
    REQUIRE(traj.steps() == steps);
    CHECK(traj.v(0)(0, 0) == Complex(1.0, 0.0));
    CHECK(traj.dv(0)(0, 0) == Complex(0.0, 0.0));  // -i*Delta with Delta = 0
    double max_err = 0.0;
    for (int n = 0; n <= steps; n += 10)
        max_err = std::max(max_err,
                           std::abs(traj.v_data(n)[0] - benchmark_v(traj.time(n))));
    CHECK(max_err < 5e-6);
}

TEST_CASE("general solver convergence order is two") {
    auto model = SpectralModel::lorentzian(2.0, 1.0, 0.0, 0.0);
    KernelSampler kernel(model);
    auto run_err = [&](double h, int steps) {
        auto traj =
            solve_volterra_general(CouplingMatrix::single(0.0), kernel, h, steps);
        double e = 0.0;
        for (int n = 0; n <= steps; ++n)
            e = std::max(e, std::abs(traj.v_data(n)[0] - benchmark_v(traj.time(n))));
        return e;
    };
    const double e1 = run_err(0.04, 500);
    const double e2 = run_err(0.02, 1000);
    const double order = std::log2(e1 / e2);
    CHECK(order > 1.8);
    CHECK(order < 2.2);
}

TEST_CASE("zero kernel: free evolution, unitary trajectory") {
    auto model = SpectralModel::lorentzian(0.0, 1.0, 0.0, 0.0);
    KernelSampler kernel(model);
    const double delta1 = 1.7;
    auto traj =
        solve_volterra_general(CouplingMatrix::single(delta1), kernel, 1e-3, 4000);
    double max_err = 0.0, max_unit = 0.0;
    for (int n = 0; n <= traj.steps(); n += 40) {
        const double t = traj.time(n);
        max_err = std::max(max_err,
                           std::abs(traj.v_data(n)[0] - std::exp(Complex(0, -delta1 * t))));
        max_unit = std::max(max_unit, std::abs(std::abs(traj.v_data(n)[0]) - 1.0));
    }
    CHECK(max_err < 1e-5);
    const double bound = 10.0 * traj.steps() * 1e-6 * delta1 * delta1;
    CHECK(max_unit < bound);
}

TEST_CASE("zero kernel, two coupled subsystems: matrix exponential") {
    SpectralModel model;
    model.envs.push_back(SpectralModel::lorentzian(0.0, 1.0, 0.0, 0.0).envs[0]);
    model.envs.push_back(SpectralModel::lorentzian(0.0, 1.0, 0.0, 0.0).envs[0]);
    KernelSampler kernel(model);
    Matrix delta(2, 2);
    delta << Complex(1.0, 0.0), Complex(0.3, 0.2), Complex(0.3, -0.2),
        Complex(-0.5, 0.0);
    CouplingMatrix coupling(delta);
    auto traj = solve_volterra_general(coupling, kernel, 1e-3, 3000);
    const double t_end = traj.t_end();
    const Matrix expected = (Complex(0, -1) * delta * t_end).exp();
    CHECK((traj.v(traj.steps()) - expected).norm() < 1e-5);
    // unitarity bound for Hermitian coupling and zero kernel
    const Matrix gram = traj.v(traj.steps()).adjoint() * traj.v(traj.steps());
    CHECK((gram - Matrix::Identity(2, 2)).norm() <
          10.0 * traj.steps() * 1e-6 * std::norm(delta.norm()));
}

TEST_CASE("near-Markov limit: slow decay rate matches the root formula") {
    // linewidth 25, coupling 1: rate = (25 - sqrt(625 - 50)) / 2
    auto model = SpectralModel::lorentzian(1.0, 25.0, 0.0, 0.0);
    const double slow_rate = (25.0 - std::sqrt(625.0 - 2.0 * 25.0 * 1.0)) / 2.0;
    auto traj = solve_volterra_expfast(CouplingMatrix::single(0.0), model, 1e-3, 20000);
    const auto v_at = [&](double t) {
        return std::abs(traj.v_data(static_cast<int>(t / 1e-3))[0]);
    };
    const double fitted = -(std::log(v_at(18.0)) - std::log(v_at(10.0))) / 8.0;
    CHECK(std::abs(fitted - slow_rate) < 5e-3 * slow_rate);
}

TEST_CASE("expfast: initial conditions and cross-solver agreement") {
    auto model = SpectralModel::lorentzian(2.0, 1.0, 0.0, 0.0);
    KernelSampler kernel(model);
    const double h = 1e-3;
    const int steps = 20000;  // t in [0, 20]
    auto fast = solve_volterra_expfast(CouplingMatrix::single(0.0), model, h, steps);
    CHECK(fast.v(0)(0, 0) == Complex(1.0, 0.0));
    double fast_err = 0.0;
    for (int n = 0; n <= steps; n += 7)
        fast_err = std::max(fast_err,
                            std::abs(fast.v_data(n)[0] - benchmark_v(fast.time(n))));
    CHECK(fast_err < 1e-9);

    auto general = solve_volterra_general(CouplingMatrix::single(0.0), kernel, h, steps);
    double diff = 0.0;
    for (int n = 0; n <= steps; ++n)
        diff = std::max(diff, std::abs(fast.v_data(n)[0] - general.v_data(n)[0]));
    CHECK(diff < 1e-6);
}

TEST_CASE("expfast rejects tabulated kernels") {
    TabulatedDensity table;
    for (int i = 0; i <= 4000; ++i) {
        const double w = -30.0 + 60.0 * i / 4000.0;
        table.omega.push_back(w);
        table.j.push_back(0.1 / (w * w + 1.0));
    }
    SpectralModel model;
    SubEnvironment env;
    env.kind = SpectralKind::Tabulated;
    env.table = table;
    env.tabulated_tolerance = 1e-3;
    model.envs.push_back(env);
    CHECK_THROWS_AS(
        solve_volterra_expfast(CouplingMatrix::single(0.0), model, 1e-2, 10),
        ConfigError);
}

TEST_CASE("strong coupling: trajectory zeros sit near the quarter periods") {
    // g = 1, linewidth 0.02 -> coupling 2 g^2 / linewidth = 100
    auto model = SpectralModel::lorentzian(100.0, 0.02, 0.0, 0.0);
    auto traj = solve_volterra_expfast(CouplingMatrix::single(0.0), model, 1e-3, 10000);
    std::vector<double> zeros;
    for (int n = 1; n <= traj.steps(); ++n) {
        const double a = traj.v_data(n - 1)[0].real();
        const double b = traj.v_data(n)[0].real();
        if (a == 0.0) continue;
        if ((a < 0.0) != (b < 0.0))
            zeros.push_back(traj.time(n - 1) + 1e-3 * a / (a - b));
    }
    REQUIRE(zeros.size() >= 3);
    for (size_t k = 0; k < 3; ++k)
        CHECK(std::abs(zeros[k] - (M_PI / 2 + k * M_PI)) < 0.05);
    // flagged neighborhoods follow the zeros
    REQUIRE(!traj.near_singular_steps().empty());
    for (double z : zeros) {
        bool covered = false;
        for (int s : traj.near_singular_steps())
            if (std::abs(traj.time(s) - z) <= 2e-3) covered = true;
        CHECK(covered);
    }
}

TEST_CASE("markovian kernel: pure local damping") {
    auto model = SpectralModel::markovian(1.0);
    KernelSampler kernel(model);
    auto traj = solve_volterra_general(CouplingMatrix::single(0.0), kernel, 1e-3, 5000);
    double max_err = 0.0;
    for (int n = 0; n <= traj.steps(); n += 25)
        max_err = std::max(max_err, std::abs(traj.v_data(n)[0] -
                                             std::exp(-0.5 * traj.time(n))));
    CHECK(max_err < 1e-7);  // no memory integral, only trapezoid stepping error
    auto fast = solve_volterra_expfast(CouplingMatrix::single(0.0), model, 1e-3, 5000);
    CHECK(std::abs(fast.v_data(5000)[0] - traj.v_data(5000)[0]) < 1e-7);
}

TEST_CASE("trajectory CSV export") {
    auto model = SpectralModel::lorentzian(2.0, 1.0, 0.0, 0.0);
    auto traj = solve_volterra_expfast(CouplingMatrix::single(0.0), model, 0.1, 10);
    std::ostringstream out;
    traj.write_csv(out);
    std::istringstream in(out.str());
    std::string header;
    std::getline(in, header);
    CHECK(header == "t,ReV00,ImV00");
    int rows = 0;
    double t, re, im;
    char comma;
    while (in >> t >> comma >> re >> comma >> im) {
        CHECK(std::abs(re - benchmark_v(t)) < 1e-8);
        ++rows;
    }
    CHECK(rows == 11);
}
