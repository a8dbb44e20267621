#pragma once

#include <stdexcept>
#include <string>

namespace vbtrack {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
    /// Stable machine-readable category, used by the CLI error line.
    virtual const char* kind() const noexcept { return "error"; }
};

class InvalidParameter : public Error {
public:
    using Error::Error;
    const char* kind() const noexcept override { return "invalid-parameter"; }
};

/// Factorization failure, indefinite covariance, or a degenerate VB factor.
class NumericDegeneracy : public Error {
public:
    using Error::Error;
    const char* kind() const noexcept override { return "numeric-degeneracy"; }
};

class DimensionMismatch : public Error {
public:
    using Error::Error;
    const char* kind() const noexcept override { return "dimension-mismatch"; }
};

/// Every hypothesis carries zero probability.
class EmptyPosterior : public Error {
public:
    using Error::Error;
    const char* kind() const noexcept override { return "empty-posterior"; }
};

class IoError : public Error {
public:
    using Error::Error;
    const char* kind() const noexcept override { return "io"; }
};

}  // namespace vbtrack
