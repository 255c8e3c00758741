/// @file common.hpp
/// @brief Shared error types and small numeric utilities.
#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace hfl {

/// Invalid or inconsistent configuration value; carries the offending field path.
class ConfigError : public std::runtime_error {
public:
    ConfigError(std::string field_path, const std::string& what)
        : std::runtime_error(field_path + ": " + what), field_path_(std::move(field_path)) {}
    const std::string& field_path() const { return field_path_; }

private:
    std::string field_path_;
};

/// Iterative solver failed to reach its tolerance; carries the achieved residual.
class SolverError : public std::runtime_error {
public:
    SolverError(const std::string& what, double achieved_residual)
        : std::runtime_error(what), achieved_residual_(achieved_residual) {}
    double achieved_residual() const { return achieved_residual_; }

private:
    double achieved_residual_;
};

/// Reference quadrature / oracle failed to converge; carries the achieved tolerance.
class OracleError : public std::runtime_error {
public:
    OracleError(const std::string& what, double achieved_tolerance)
        : std::runtime_error(what), achieved_tolerance_(achieved_tolerance) {}
    double achieved_tolerance() const { return achieved_tolerance_; }

private:
    double achieved_tolerance_;
};

/// Point outside the tubular neighborhood where the nearest-point projection is valid.
class TubeViolationError : public std::domain_error {
    using std::domain_error::domain_error;
};

/// Compensated (Kahan) accumulator; keeps long energy reductions at rounding level.
class KahanSum {
public:
    void add(double x) {
        double y = x - c_;
        double t = s_ + y;
        c_ = (t - s_) - y;
        s_ = t;
    }
    double value() const { return s_; }

private:
    double s_ = 0.0;
    double c_ = 0.0;
};

/// FNV-1a 64-bit hash, used to stamp outputs with the resolved configuration.
inline std::uint64_t fnv1a64(std::string_view data) {
    std::uint64_t h = 1469598103934665603ull;
    for (unsigned char c : data) {
        h ^= c;
        h *= 1099511628211ull;
    }
    return h;
}

inline double sqr(double x) { return x * x; }

/// Euclidean norm of a small vector.
double norm2(const std::vector<double>& v);

/// Dot product of small vectors of equal length.
double dot(const std::vector<double>& a, const std::vector<double>& b);

}  // namespace hfl
