#pragma once

#include <stdexcept>
#include <string>

namespace wbe {

/// Input data violates a precondition (bad values, too short, gaps, ...).
class DataError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// A numerical procedure could not produce a result (singular design, ...).
class NumericError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Invalid configuration or parameter outside its domain.
class ConfigError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

}  // namespace wbe
