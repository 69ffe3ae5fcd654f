#pragma once

#include <stdexcept>
#include <string>

namespace wavereg {

/// Base of every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Invalid scenario or parameter set. `what()` names the violated hypothesis.
class ConfigError : public Error {
public:
    using Error::Error;
};

/// Scenario file could not be parsed.
class ParseError : public ConfigError {
public:
    ParseError(const std::string& file, int line, const std::string& msg)
        : ConfigError(file + (line > 0 ? ":" + std::to_string(line) : std::string{}) + ": " + msg),
          line_(line) {}

    [[nodiscard]] int line() const noexcept { return line_; }

private:
    int line_;
};

/// Time step exceeds the stability limit of an explicit scheme.
class CflError : public Error {
public:
    using Error::Error;
};

/// A field or ODE state became NaN/Inf. Carries the simulation time of the first offending step.
class NonFiniteError : public Error {
public:
    NonFiniteError(const std::string& what, double t)
        : Error(what + " became non-finite at t=" + std::to_string(t)), time_(t) {}

    [[nodiscard]] double time() const noexcept { return time_; }

private:
    double time_;
};

/// Interpolated history lookup outside the stored span.
class HistorySpanError : public Error {
public:
    using Error::Error;
};

/// Coordinate change to the observer canonical form does not exist.
class SingularTransformError : public Error {
public:
    using Error::Error;
};

/// Closed-form kernel denominator vanished.
class DegenerateDenominatorError : public Error {
public:
    using Error::Error;
};

/// Quadrature could not reach the requested tolerance on the given grid.
class QuadratureError : public Error {
public:
    using Error::Error;
};

/// Decay fit needs more envelope peaks than the series provides.
class InsufficientPeaksError : public Error {
public:
    using Error::Error;
};

} // namespace wavereg
