#pragma once

#include <stdexcept>
#include <string>

namespace csc {

// Error categories map one-to-one onto the CLI exit codes.
class UsageError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

class DataError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Divergence, non-finite activations, step constant too small.
class NumericalError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

}  // namespace csc
