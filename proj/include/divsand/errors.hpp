#pragma once

#include <stdexcept>
#include <string>

#include "divsand/coord.hpp"

namespace divsand {

/// Base class of every error raised by the library.
class Error : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

/// Invalid input: bad configuration, violated precondition, malformed file.
class ValidationError : public Error {
  public:
    using Error::Error;
};

/// A computation ran but failed to produce a trustworthy answer.
class NumericalError : public Error {
  public:
    using Error::Error;
};

/// A covariance multiplier is non-positive or asymmetric at `frequency`.
class KernelInvalidError : public ValidationError {
  public:
    KernelInvalidError(const std::string& what, Coord frequency, int dim)
        : ValidationError(what), frequency_(frequency), dim_(dim) {}

    const Coord& frequency() const noexcept { return frequency_; }
    int dim() const noexcept { return dim_; }

  private:
    Coord frequency_;
    int dim_;
};

/// The kernel's Fourier multiplier tends to zero; the bi-Laplacian
/// (b_n) scaling path must be used instead.
class ZeroLimitError : public ValidationError {
  public:
    using ValidationError::ValidationError;
};

/// Toppling did not reach the tolerance within the round budget.
class StabilizationError : public NumericalError {
  public:
    StabilizationError(const std::string& what, long rounds, double residual)
        : NumericalError(what), rounds_(rounds), residual_(residual) {}

    long rounds() const noexcept { return rounds_; }
    double residual() const noexcept { return residual_; }

  private:
    long rounds_;
    double residual_;
};

}  // namespace divsand
