#include "doctest.h"

#include <cmath>
#include <complex>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <random>

#include "tlme/spectral.hpp"
#include "oracles.hpp"

using namespace tlme;

namespace {

double lorentz_j(double coupling, double lam, double center, double w) {
    const double d = w - center;
    return coupling / (2.0 * M_PI) * lam * lam / (d * d + lam * lam);
}

}  // namespace

TEST_CASE("dissipation kernel: Lorentzian closed form vs quadrature oracle at tau=0") {
    auto model = SpectralModel::lorentzian(1.0, 2.0, 0.0, 0.0);
    // independent oracle: Simpson integral of J over a wide window
    const double w_max = 2.0e5;
    const Complex integral = oracle::integrate(
        [&](double w) { return Complex(lorentz_j(1.0, 2.0, 0.0, w), 0.0); }, -w_max,
        w_max, 1e-11);
    CHECK(std::abs(integral - Complex(1.0, 0.0)) < 2e-5);  // Gamma*lam/2 = 1
    const Matrix f0 = dissipation_kernel(model, 0.0);
    CHECK(std::abs(f0(0, 0) - Complex(1.0, 0.0)) < 1e-12);
}

TEST_CASE("dissipation kernel: Lorentzian at tau=1 equals (1/2)e^-1") {
    auto model = SpectralModel::lorentzian(1.0, 1.0, 0.0, 0.0);
    const double expected = 0.5 * std::exp(-1.0);
    const double w_max = 2.0e4;
    const Complex integral = oracle::integrate_oscillatory(
        [&](double w) {
            const double j = lorentz_j(1.0, 1.0, 0.0, w);
            return Complex(j * std::cos(w), -j * std::sin(w));
        },
        -w_max, w_max, 1.0, 1e-12);
    CHECK(std::abs(integral - Complex(expected, 0.0)) < 1e-7);
    CHECK(std::abs(dissipation_kernel(model, 1.0)(0, 0) - Complex(expected, 0.0)) <
          1e-12);
    CHECK(std::abs(dissipation_kernel_quadrature(model, 1.0)(0, 0) -
                   Complex(expected, 0.0)) < 1e-10);
}

TEST_CASE("dissipation kernel: zero coupling gives zero kernel") {
    auto model = SpectralModel::lorentzian(0.0, 1.0, 0.0, 0.0);
    CHECK(dissipation_kernel(model, 0.0).norm() == 0.0);
    CHECK(dissipation_kernel(model, 2.5).norm() == 0.0);
}

TEST_CASE("dissipation kernel: analytic and quadrature routes agree pointwise") {
    // detuned, offset line; relative error target 1e-8 across tau*lam in [0, 20]
    auto model = SpectralModel::lorentzian(1.7, 0.8, 0.9, 0.25);
    for (int i = 0; i <= 40; ++i) {
        const double tau = 20.0 * i / 40.0 / 0.8;  // tau*lam in [0, 20]
        const Complex fa = dissipation_kernel(model, tau)(0, 0);
        const Complex fq = dissipation_kernel_quadrature(model, tau)(0, 0);
        CHECK(std::abs(fa - fq) <= 1e-8 * std::abs(fa));
    }
}

TEST_CASE("dissipation kernel rejects negative tau") {
    auto model = SpectralModel::lorentzian(1.0, 1.0, 0.0, 0.0);
    CHECK_THROWS_AS(dissipation_kernel(model, -0.1), ConfigError);
    CHECK_THROWS_AS(dissipation_kernel_quadrature(model, -1e-9), ConfigError);
}

TEST_CASE("noise kernel vanishes at zero temperature") {
    auto model = SpectralModel::lorentzian(1.0, 1.0, 0.3, 0.1);
    CHECK(noise_kernel(model, 0.0).norm() == 0.0);
    CHECK(noise_kernel(model, 3.7).norm() == 0.0);
}

TEST_CASE("noise kernel at tau=0: real, positive, matches direct quadrature") {
    const double temperature = 400.0, shift = 2000.0;
    auto model = SpectralModel::lorentzian(1.0, 1.0, 0.0, 0.0, temperature, shift);
    const Complex g0 = noise_kernel(model, 0.0)(0, 0);
    CHECK(g0.real() > 0.0);
    CHECK(std::abs(g0.imag()) < 1e-12 * g0.real());

    // direct quadrature oracle over the same resolved band (left edge at
    // center - 50*lam by definition, right edge far into the thermal tail)
    auto integrand = [&](double w) {
        const double n = 1.0 / std::expm1((w + shift) / temperature);
        return Complex(lorentz_j(1.0, 1.0, 0.0, w) * n, 0.0);
    };
    const Complex ref = oracle::integrate(integrand, -50.0, 3.0e5, 1e-13);
    CHECK(std::abs(g0 - ref) < 1e-8 * std::abs(ref) + 1e-13);
}

TEST_CASE("noise kernel Hermitian symmetry G(-tau) = adjoint(G(tau))") {
    SpectralModel model;
    model.envs.push_back(SpectralModel::lorentzian(1.0, 1.0, 0.0, 0.0).envs[0]);
    model.envs.push_back(
        SpectralModel::lorentzian(0.5, 2.0, 1.0, -0.2, 300.0, 2000.0).envs[0]);
    model.validate();
    std::mt19937 rng(12345);
    std::uniform_real_distribution<double> dist(0.0, 8.0);
    for (int trial = 0; trial < 8; ++trial) {
        const double tau = dist(rng);
        const Matrix gp = noise_kernel(model, tau);
        const Matrix gm = noise_kernel(model, -tau);
        CHECK((gm - gp.adjoint()).norm() < 1e-14);
    }
    // G(0) Hermitian positive semidefinite (diagonal model: entries >= 0)
    const Matrix g0 = noise_kernel(model, 0.0);
    CHECK((g0 - g0.adjoint()).norm() < 1e-14);
    Eigen::SelfAdjointEigenSolver<Matrix> es(g0);
    CHECK(es.eigenvalues().minCoeff() > -1e-14);
}

TEST_CASE("noise kernel grid matches single evaluations") {
    auto model = SpectralModel::lorentzian(1.0, 3.0, 0.4, 0.0, 500.0, 2000.0);
    const double h = 0.05;
    const int count = 160;
    const auto grid = noise_kernel_grid(model, h, count);
    REQUIRE(static_cast<int>(grid.size()) == count + 1);
    const double scale = std::abs(grid[0](0, 0));
    for (int k : {0, 1, 7, 40, 99, 160}) {
        const Complex direct = noise_kernel(model, k * h)(0, 0);
        CHECK(std::abs(grid[k](0, 0) - direct) < 2e-8 * scale + 1e-13);
    }
}

TEST_CASE("Markovian model: delta weight, no pointwise sampler") {
    auto model = SpectralModel::markovian(2.0);
    KernelSampler sampler(model);
    CHECK(sampler.has_delta());
    CHECK(sampler.delta_weight()(0, 0) == Complex(2.0, 0.0));
    CHECK(sampler.dissipation(1.0).norm() == 0.0);  // smooth part only
    CHECK_THROWS_AS(dissipation_kernel_quadrature(model, 0.5), ConfigError);
    CHECK(noise_kernel(model, 0.3).norm() == 0.0);

    SpectralModel thermal = model;
    thermal.envs[0].temperature = 10.0;
    CHECK_THROWS_AS(thermal.validate(), ConfigError);
}

TEST_CASE("tabulated density: round trip against its own interpolant") {
    SpectralModel model;
    {
        SubEnvironment e;
        e.kind = SpectralKind::Tabulated;
        e.tabulated_tolerance = 1e-4;
        for (int i = 0; i <= 12000; ++i) {
            const double w = -60.0 + 120.0 * i / 12000.0;
            e.table.omega.push_back(w);
            e.table.j.push_back(lorentz_j(1.0, 1.0, 0.0, w));
        }
        model.envs.push_back(e);
        model.validate();
    }
    for (double tau : {0.0, 0.5, 2.0}) {
        const Complex f = dissipation_kernel(model, tau)(0, 0);
        const Complex ref = oracle::integrate_oscillatory(
            [&](double w) {
                const double j = lorentz_j(1.0, 1.0, 0.0, w);
                return j * std::exp(Complex(0.0, -w * tau));
            },
            -60.0, 60.0, tau, 1e-12);
        // same band, so the difference is the interpolation error alone
        CHECK(std::abs(f - ref) < 5e-5);
        // and the full-line closed form differs only by the truncated tails
        const Complex closed =
            dissipation_kernel(SpectralModel::lorentzian(1.0, 1.0, 0.0, 0.0), tau)(0, 0);
        CHECK(std::abs(f - closed) < 2e-2);
    }
}

TEST_CASE("tabulated density: validation rejects bad grids") {
    TabulatedDensity coarse;
    for (int i = 0; i <= 12; ++i) {
        const double w = -20.0 + 40.0 * i / 12.0;
        coarse.omega.push_back(w);
        coarse.j.push_back(lorentz_j(1.0, 1.0, 0.0, w));
    }
    CHECK_THROWS_AS(SpectralModel::tabulated(coarse), ConfigError);

    TabulatedDensity negative;
    negative.omega = {0.0, 1.0, 2.0};
    negative.j = {0.1, -0.2, 0.1};
    CHECK_THROWS_AS(SpectralModel::tabulated(negative), ConfigError);

    TabulatedDensity unsorted;
    unsorted.omega = {0.0, 2.0, 1.0};
    unsorted.j = {0.1, 0.2, 0.1};
    CHECK_THROWS_AS(SpectralModel::tabulated(unsorted), ConfigError);
}

TEST_CASE("tabulated density file parsing") {
    const auto path = std::filesystem::temp_directory_path() / "tlme_test_density.txt";
    {
        std::ofstream out(path);
        out << "# frequency  J(omega)\n";
        for (int i = 0; i <= 600; ++i) {
            const double w = -12.0 + 24.0 * i / 600.0;
            out << w << "   " << lorentz_j(1.0, 2.0, 0.0, w);
            if (i % 7 == 0) out << "  # inline note";
            out << "\n";
        }
        out << "\n";
    }
    const auto table = TabulatedDensity::load(path.string());
    CHECK(table.omega.size() == 601);
    SpectralModel model;
    {
        SubEnvironment e;
        e.kind = SpectralKind::Tabulated;
        e.table = table;
        e.tabulated_tolerance = 1e-3;
        model.envs.push_back(e);
        model.validate();
    }
    CHECK(dissipation_kernel(model, 0.0)(0, 0).real() > 0.8);
    std::filesystem::remove(path);

    CHECK_THROWS_AS(TabulatedDensity::load("/nonexistent/file.txt"), ConfigError);
}

TEST_CASE("bose occupation guards the pole") {
    auto model = SpectralModel::lorentzian(1.0, 1.0, 0.0, 0.0, 100.0, 50.0);
    CHECK_THROWS_AS(bose_occupation(model.envs[0], -60.0), ConfigError);
    // window would reach the pole: bose_shift far too small for the line width
    CHECK_THROWS_AS(noise_kernel(model, 0.0), ConfigError);
}
