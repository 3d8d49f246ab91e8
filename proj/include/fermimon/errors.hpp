#pragma once

#include <stdexcept>
#include <string>

namespace fermimon {

/// Invalid configuration or malformed input (CLI exit code 2).
class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// A sector or matrix would exceed the memory budget (CLI exit code 3).
class CapacityError : public std::runtime_error {
public:
    CapacityError(const std::string& what, std::size_t requested, std::size_t budget)
        : std::runtime_error(what + " (requested " + std::to_string(requested) + ", budget "
                             + std::to_string(budget) + ")"),
          requested_(requested), budget_(budget) {}

    std::size_t requested() const noexcept { return requested_; }
    std::size_t budget() const noexcept { return budget_; }

private:
    std::size_t requested_;
    std::size_t budget_;
};

/// An operator term would leave the (N_up, N_down) sector.
class SectorError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Base class for numerical failures (CLI exit code 4).
class NumericalError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// The adaptive integrator could not satisfy its tolerance above the minimum step.
class StiffnessError : public NumericalError {
public:
    using NumericalError::NumericalError;
};

/// A jump was requested on a state the jump operator annihilates.
class DarkStateError : public NumericalError {
public:
    using NumericalError::NumericalError;
};

/// Iterative eigensolver hit its iteration cap.
class ConvergenceError : public NumericalError {
public:
    using NumericalError::NumericalError;
};

/// Stochastic step violates its small-probability / small-rotation preconditions.
class StepSizeError : public NumericalError {
public:
    using NumericalError::NumericalError;
};

}  // namespace fermimon
