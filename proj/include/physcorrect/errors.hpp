#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace physcorrect {

/// Caller violated a documented precondition (shape mismatch, bad parameter).
class ContractError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Precondition holds formally but the input carries no usable information
/// (e.g. a zero reference field used as a normaliser).
class DegenerateInputError : public ContractError {
public:
    using ContractError::ContractError;
};

/// A dense path was requested for a problem larger than the configured cap.
class CapacityError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class NumericalError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class DivergenceError : public std::runtime_error {
public:
    DivergenceError(const std::string& what, std::size_t step)
        : std::runtime_error(what + " (step " + std::to_string(step) + ")"), step_(step) {}

    std::size_t step() const noexcept { return step_; }

private:
    std::size_t step_;
};

class ConvergenceError : public std::runtime_error {
public:
    ConvergenceError(const std::string& what, double final_residual)
        : std::runtime_error(what + " (final residual " + std::to_string(final_residual) + ")"),
          final_residual_(final_residual) {}

    double final_residual() const noexcept { return final_residual_; }

private:
    double final_residual_;
};

/// Malformed or mismatched on-disk artifact.
class FormatError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

}  // namespace physcorrect
