#pragma once

#include <stdexcept>
#include <string>

namespace oltsm {

// Caller handed us something that violates a documented precondition.
class InvalidArgument : public std::invalid_argument
{
public:
    using std::invalid_argument::invalid_argument;
};

// Malformed input data (stream lines, map files, reports).
class DataError : public std::runtime_error
{
public:
    using std::runtime_error::runtime_error;
};

// Internal invariant violated; always a bug.
class InvariantError : public std::logic_error
{
public:
    using std::logic_error::logic_error;
};

} // namespace oltsm
