#pragma once

#include <stdexcept>
#include <string>

namespace dgms {

// Base for everything thrown by this library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Malformed textual input (source code, bracketed parses, JSON). The message
// carries the position (line:col or byte offset) when one is known.
class ParseError : public Error {
public:
    using Error::Error;
};

// A caller violated a precondition (bad index, empty input, ...).
class ArgumentError : public Error {
public:
    using Error::Error;
};

// Tensor shapes do not conform.
class ShapeError : public Error {
public:
    using Error::Error;
};

// An operation was applied in the wrong state (e.g. double augmentation).
class StateError : public Error {
public:
    using Error::Error;
};

// Well-formed input whose content cannot be used (schema violations,
// fingerprint mismatches, missing files).
class DataError : public Error {
public:
    using Error::Error;
};

} // namespace dgms
