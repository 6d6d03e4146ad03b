#pragma once

#include <stdexcept>
#include <string>

namespace thermoscope {

// Root of every error thrown by the toolkit.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Malformed or missing input documents (JSON, XML, annotation text).
class ParseError : public Error {
public:
    using Error::Error;
};

// A value violates a documented invariant (box outside image, bad split).
class ValidationError : public Error {
public:
    using Error::Error;
};

// Tensor shapes or channel counts disagree.
class DimensionError : public Error {
public:
    using Error::Error;
};

// NaN / Inf where finite values are required.
class NumericError : public Error {
public:
    using Error::Error;
};

// An operation was called before its prerequisites were set up.
class StateError : public Error {
public:
    using Error::Error;
};

// Bad user configuration. The CLI maps this to exit code 2.
class ConfigError : public Error {
public:
    using Error::Error;
};

// Filesystem / container read-write failures.
class IoError : public Error {
public:
    using Error::Error;
};

}  // namespace thermoscope
