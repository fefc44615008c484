#pragma once

#include <stdexcept>
#include <string>

namespace fsvdd {

/// Base class of every exception thrown by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Invalid parameters or configuration documents.
class ConfigError : public Error {
public:
    using Error::Error;
};

/// Malformed, missing or shape-inconsistent data.
class DataError : public Error {
public:
    using Error::Error;
};

/// Solver non-convergence, divergence, degenerate statistics.
class NumericalError : public Error {
public:
    using Error::Error;
};

}  // namespace fsvdd
