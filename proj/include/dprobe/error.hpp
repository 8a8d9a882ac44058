#pragma once

#include <stdexcept>
#include <string>

namespace dprobe {

/// Argument outside the domain of an operation (time outside [0,T], point outside the box, ...).
class DomainError : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

/// Evaluation at (or numerically on) the pole of a fundamental solution.
class PoleError : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

/// A documented precondition does not hold (needle clearance, parameter ranges, ...).
class PreconditionError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Iterative or quadrature routine failed to reach its tolerance.
class NumericalError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Mismatched array shapes or grids.
class ShapeError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Too few inputs for a fit or an empty ladder.
class ArityError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Invalid user-supplied parameter (delta <= 0, unsorted ladder, ...).
class ParameterError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Configuration file problem; the message carries line number and key.
class ConfigError : public std::runtime_error {
public:
    ConfigError(int line, std::string key, const std::string& what)
        : std::runtime_error("line " + std::to_string(line) + ", key '" + key + "': " + what),
          line_(line), key_(std::move(key))
    {
    }
    int line() const { return line_; }
    const std::string& key() const { return key_; }

private:
    int line_;
    std::string key_;
};

} // namespace dprobe
