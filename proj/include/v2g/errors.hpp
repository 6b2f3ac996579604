#pragma once

#include <stdexcept>
#include <string>

namespace v2g {

/// Bad static configuration (non-positive base, zero-length feeder, ...).
class ConfigError : public std::runtime_error {
public:
    explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

/// Scenario file rejected; carries the offending field when known.
class ValidationError : public std::runtime_error {
public:
    explicit ValidationError(const std::string& what) : std::runtime_error(what) {}
    ValidationError(const std::string& field, const std::string& reason)
        : std::runtime_error(field + ": " + reason), field_(field) {}

    const std::string& field() const noexcept { return field_; }

private:
    std::string field_;
};

/// Numerical method failed to converge (Newton, fixed point) or the
/// requested loading is infeasible (voltage collapse).
class SolverError : public std::runtime_error {
public:
    explicit SolverError(const std::string& what, double last_residual = 0.0)
        : std::runtime_error(what), last_residual_(last_residual) {}

    double last_residual() const noexcept { return last_residual_; }

private:
    double last_residual_;
};

/// Non-finite state encountered while integrating.
class NumericalFault : public std::runtime_error {
public:
    explicit NumericalFault(const std::string& what) : std::runtime_error(what) {}
};

} // namespace v2g
