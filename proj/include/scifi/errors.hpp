#pragma once

#include <stdexcept>
#include <string>

namespace scifi {

// Base of every error thrown by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Invalid parameters, dimension mismatches, violated preconditions.
class ConfigError : public Error {
public:
    using Error::Error;
};

// Malformed or inconsistent input data (CSV rows, timestamps, empty sets).
class DataError : public Error {
public:
    using Error::Error;
};

// Numerical breakdown inside the estimators.
class NumericalError : public Error {
public:
    using Error::Error;
};

// Innovation covariance S is not positive definite.
class SingularInnovationError : public NumericalError {
public:
    using NumericalError::NumericalError;
};

// Pseudo-measurement noise covariance is not invertible.
class DegeneratePseudoNoiseError : public NumericalError {
public:
    using NumericalError::NumericalError;
};

// Filter covariance grew past the divergence guard.
class DivergenceError : public NumericalError {
public:
    using NumericalError::NumericalError;
};

} // namespace scifi
