#pragma once

#include <stdexcept>
#include <string>

namespace tpg {

class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Mismatched shapes or quadrature weights between vectors that are combined.
class DimensionError : public Error {
public:
    using Error::Error;
};

// A scalar argument outside its admissible range (s <= 1, tau <= 1, ...).
class ParameterError : public Error {
public:
    using Error::Error;
};

// Inner linear solves that fail to reach their tolerance.
class SolverError : public Error {
public:
    using Error::Error;
};

class IoError : public Error {
public:
    using Error::Error;
};

class ConfigError : public Error {
public:
    using Error::Error;
    ConfigError(const std::string& origin, long line, const std::string& what)
        : Error(origin + ":" + std::to_string(line) + ": " + what) {}
};

}  // namespace tpg
