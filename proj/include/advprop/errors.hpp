#pragma once

#include <stdexcept>
#include <string>

namespace advprop {

/// Base class for every failure raised by this library.
class Error : public std::runtime_error {
public:
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

/// Dimension mismatch between operands; the message names both shapes.
class ShapeError : public Error {
public:
    using Error::Error;
};

/// NaN/Inf encountered, or a numeric routine failed to converge.
class NumericError : public Error {
public:
    using Error::Error;
};

/// Invalid hyperparameter, architecture, preset or flag value.
class ConfigError : public Error {
public:
    using Error::Error;
};

/// Well-formed file or argument with out-of-range or inconsistent content.
class DataError : public Error {
public:
    using Error::Error;
};

/// Malformed file: bad magic, truncation, wrong record size.
class FormatError : public Error {
public:
    using Error::Error;
};

/// Broken internal invariant, e.g. a trace replayed against the wrong net.
class InternalError : public Error {
public:
    using Error::Error;
};

}  // namespace advprop
