#ifndef TLME_TYPES_HPP
#define TLME_TYPES_HPP

#include <complex>
#include <stdexcept>
#include <string>

#include <Eigen/Dense>

namespace tlme {

using Complex = std::complex<double>;
using Matrix = Eigen::MatrixXcd;
using Vector = Eigen::VectorXcd;
using RealVector = Eigen::VectorXd;

inline constexpr Complex kI{0.0, 1.0};

// Bad or inconsistent user input (CLI exit code 2).
class ConfigError : public std::runtime_error {
public:
    explicit ConfigError(const std::string& msg) : std::runtime_error(msg) {}
};

// Numerical failure inside a solver (CLI exit code 3).
class SolverError : public std::runtime_error {
public:
    explicit SolverError(const std::string& msg) : std::runtime_error(msg) {}
};

// A coefficient pole inside the integration window that the minimum step
// cannot resolve.
class PoleCrossingError : public SolverError {
public:
    PoleCrossingError(const std::string& msg, double t)
        : SolverError(msg), time(t) {}
    double time;
};

// An iteration or cutoff ladder that did not settle (CLI exit code 4).
class NonConvergenceError : public std::runtime_error {
public:
    explicit NonConvergenceError(const std::string& msg)
        : std::runtime_error(msg) {}
};

}  // namespace tlme

#endif  // TLME_TYPES_HPP
