#pragma once

#include <stdexcept>
#include <string>

namespace tm2d {

// All library failures derive from Error so the CLI can map them to exit codes.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class ShapeError : public Error {
public:
    using Error::Error;
};

class IndexError : public Error {
public:
    using Error::Error;
};

class RangeError : public Error {
public:
    using Error::Error;
};

class ConfigError : public Error {
public:
    using Error::Error;
};

class ContractError : public Error {
public:
    using Error::Error;
};

class NumericalError : public Error {
public:
    using Error::Error;
};

// Malformed or incompatible file (bad magic, wrong version, K/d mismatch).
class FormatError : public Error {
public:
    using Error::Error;
};

}  // namespace tm2d
