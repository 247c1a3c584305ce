#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace vcenergy {

/// Base class for every failure raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Malformed input text. `line()` is 1-based; 0 when not line-oriented.
class ParseError : public Error {
public:
    ParseError(const std::string& what, std::size_t line = 0)
        : Error(line ? "line " + std::to_string(line) + ": " + what : what), line_(line) {}

    std::size_t line() const noexcept { return line_; }

private:
    std::size_t line_;
};

/// The platform does not expose the requested power domain.
class DomainUnavailable : public Error {
public:
    using Error::Error;
};

class PermissionDenied : public Error {
public:
    using Error::Error;
};

/// Too few samples to compute the requested quantity.
class InsufficientSamples : public Error {
public:
    using Error::Error;
};

/// A job window cannot be aligned with a trace (meter outage or clock skew).
class AlignmentError : public Error {
public:
    using Error::Error;
};

class SamplerError : public Error {
public:
    using Error::Error;
};

/// Configuration violates its schema or a parameter constraint. `field()` names the offending path.
class ConfigError : public Error {
public:
    ConfigError(std::string field, const std::string& what)
        : Error(field + ": " + what), field_(std::move(field)) {}

    const std::string& field() const noexcept { return field_; }

private:
    std::string field_;
};

} // namespace vcenergy
