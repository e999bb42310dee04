#pragma once

#include <stdexcept>
#include <string>

namespace sharpcool {

// Invalid parameters or inputs supplied by the caller.
class DomainError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

// Parameters are valid but describe a regime where a formula has no meaning
// (non-cooling detuning, singular denominators, failed validity guards).
class RegimeError : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

// Numerical machinery failed: degenerate kernels, unstable stepping,
// non-converged quadrature, fits without a cold peak.
class SolverError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class QuadratureError : public SolverError {
public:
    QuadratureError(const std::string& what, double velocity)
        : SolverError(what + " (V = " + std::to_string(velocity) + ")"), velocity_(velocity) {}

    double velocity() const noexcept { return velocity_; }

private:
    double velocity_;
};

} // namespace sharpcool
