#pragma once

#include <stdexcept>
#include <string>

namespace segt {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Bad user input: missing files, malformed configs, contract violations on
/// shapes or sizes. The CLI maps these to exit code 2.
class InputError : public Error {
public:
    using Error::Error;
};

/// Non-finite values during optimization. The CLI maps these to exit code 3.
class NumericalError : public Error {
public:
    using Error::Error;
};

}  // namespace segt
