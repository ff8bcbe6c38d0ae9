#pragma once

#include <stdexcept>
#include <string>

namespace semiff {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Bad user input: malformed config, unknown key, inconsistent options.
class ConfigError : public Error {
public:
    using Error::Error;
};

/// A numerical construction or propagation failed (divergence, norm drift,
/// boundary leakage, non-convergence).
class NumericalError : public Error {
public:
    using Error::Error;
};

}  // namespace semiff
