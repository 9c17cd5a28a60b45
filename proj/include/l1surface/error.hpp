#pragma once

#include <stdexcept>
#include <string>

namespace l1surface {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Argument outside the mathematical domain of an operation (T <= 0, alpha <= 0, ...).
class DomainError : public Error {
public:
    using Error::Error;
};

/// Malformed input file. Carries the 1-based line number when known.
class ParseError : public Error {
public:
    ParseError(const std::string& what, std::size_t line)
        : Error(what + " (line " + std::to_string(line) + ")"), line_(line) {}
    explicit ParseError(const std::string& what) : Error(what) {}
    std::size_t line() const noexcept { return line_; }

private:
    std::size_t line_ = 0;
};

/// Input parsed but violates a data invariant (bid > ask, duplicates, ...).
class ValidationError : public Error {
public:
    using Error::Error;
};

/// Two objects that must agree (grid vs basis, quotes vs grid) do not.
class ConsistencyError : public Error {
public:
    using Error::Error;
};

/// Not enough distinct nodes to support the requested polynomial family.
class RankError : public Error {
public:
    using Error::Error;
};

/// Operation called on an object in the wrong state (e.g. non-optimal LP solution).
class StateError : public Error {
public:
    using Error::Error;
};

/// Implied volatility requested for a price outside its no-arbitrage bounds.
class NoSolutionError : public Error {
public:
    using Error::Error;
};

}  // namespace l1surface
