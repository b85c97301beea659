#pragma once

#include <stdexcept>
#include <string>

namespace gwi {

// Bad user input: malformed parameters, wrong dimensions, precondition
// violations. The CLI maps these to exit code 2.
class ValidationError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

// Sizes of vectors or matrices do not agree.
class DimensionError : public ValidationError {
public:
    using ValidationError::ValidationError;
};

// A file could not be opened, read or written.
class IoError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// A population coordinate would exceed 2^63 - 1.
class OverflowError : public std::overflow_error {
public:
    using std::overflow_error::overflow_error;
};

// An identity that must hold exactly (reconstruction, decomposition) did not.
class ConsistencyError : public std::logic_error {
public:
    using std::logic_error::logic_error;
};

}  // namespace gwi
