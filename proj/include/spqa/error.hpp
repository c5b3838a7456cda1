#pragma once

#include <stdexcept>
#include <string>

namespace spqa {

/// Raised for malformed or inconsistent input data: bad JSONL lines, corrupt
/// binary files, duplicate ids, unknown documents.
class DataError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Raised when a caller violates an operation's precondition (K == 0, empty
/// batch, out-of-range parameter).
class UsageError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

} // namespace spqa
