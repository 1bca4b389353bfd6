#pragma once

#include <stdexcept>
#include <string>

namespace mfcf {

class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// File could not be opened, read or written.
class IoError : public Error {
public:
    using Error::Error;
};

/// Input data violates its declared format (bad row, off-scale rating,
/// duplicate pair, unreadable model dump).
class FormatError : public Error {
public:
    using Error::Error;
};

/// Invalid configuration or arguments.
class ConfigError : public Error {
public:
    using Error::Error;
};

/// Training blew up: some factor left the finite range the guard allows.
class DivergenceError : public Error {
public:
    using Error::Error;
};

} // namespace mfcf
