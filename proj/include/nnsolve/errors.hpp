#pragma once

#include <stdexcept>

namespace nnsolve {

/// Invalid user-supplied parameter or configuration value.
class ParamError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Index or value outside the valid domain of an operation.
class RangeError : public std::out_of_range {
public:
    using std::out_of_range::out_of_range;
};

/// Non-finite value or failed numeric procedure.
class NumericError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Filesystem or parse failure.
class IoError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

} // namespace nnsolve
