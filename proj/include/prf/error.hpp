#pragma once

#include <stdexcept>
#include <string>

namespace prf {

/// Base of every error thrown by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Malformed input data: bad CSV rows, unparsable numbers, unknown categories.
class DataError : public Error {
public:
    using Error::Error;
};

/// Schema and data (or model and samples) disagree.
class SchemaMismatch : public Error {
public:
    using Error::Error;
};

/// Cluster storage cannot hold the feature subsets.
class CapacityError : public Error {
public:
    using Error::Error;
};

/// A precondition on an argument was violated.
class InvalidArgument : public Error {
public:
    using Error::Error;
};

}  // namespace prf
