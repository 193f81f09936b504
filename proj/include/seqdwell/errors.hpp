#pragma once

#include <stdexcept>
#include <string>

namespace seqdwell {

/// Malformed or out-of-range caller input (bad document, wrong dimensions, missing keys).
class InputError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// A requested certificate, gain, or solve does not exist for the given data.
class InfeasibleError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Numerical breakdown: singular systems, non-finite evaluator output.
class NumericError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Configuration the library deliberately does not handle (e.g. multi-input synthesis).
class UnsupportedError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

}  // namespace seqdwell
