#pragma once

#include <charconv>
#include <cstddef>
#include <stdexcept>
#include <string>

namespace gutp {

/// Shortest round-trip decimal text, locale independent.
inline std::string format_shortest(double x) {
    char buf[64];
    const auto r = std::to_chars(buf, buf + sizeof buf, x);
    return std::string(buf, r.ptr);
}

/// Base of every error thrown by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// A documented precondition was violated by the caller (shape, symmetry).
class ContractError : public Error {
public:
    using Error::Error;
};

/// Argument outside the domain of a model formula (negative frequency, d < d0).
class DomainError : public Error {
public:
    using Error::Error;
};

/// Inconsistent or missing configuration.
class ConfigError : public Error {
public:
    using Error::Error;
};

/// Non-finite or otherwise unusable input data.
class InputError : public Error {
public:
    using Error::Error;
};

/// Anchor placement cannot support the requested estimate.
class GeometryError : public Error {
public:
    using Error::Error;
};

class NumericalError : public Error {
public:
    using Error::Error;
};

class SingularityError : public NumericalError {
public:
    SingularityError(const std::string& what, std::size_t index)
        : NumericalError(what), index_(index) {}

    std::size_t index() const noexcept { return index_; }

private:
    std::size_t index_;
};

/// Bisection ran out of iterations; carries the final bracket.
class ConvergenceError : public NumericalError {
public:
    ConvergenceError(const std::string& what, double lower, double upper)
        : NumericalError(what), lower_(lower), upper_(upper) {}

    double lower() const noexcept { return lower_; }
    double upper() const noexcept { return upper_; }

private:
    double lower_;
    double upper_;
};

/// No sign change of the constraint function could be bracketed.
class InfeasibleError : public NumericalError {
public:
    using NumericalError::NumericalError;
};

}  // namespace gutp
