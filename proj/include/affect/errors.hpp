#pragma once

#include <stdexcept>
#include <string>

namespace affect {

// Base for every error the library raises on purpose.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// A value failed a precondition (range, finiteness, arity).
class InvalidArgument : public Error {
public:
    using Error::Error;
};

// Configuration is missing, malformed or inconsistent.
class ConfigError : public Error {
public:
    using Error::Error;
};

// Time went backwards relative to state that has already been advanced.
class ClockRegression : public Error {
public:
    using Error::Error;
};

} // namespace affect
