// Exception hierarchy shared by every polyfilter module.
#pragma once

#include <stdexcept>
#include <string>

namespace polyfilter {

/// Base class for all library errors.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Errors caused by malformed input (shapes, ranges, configuration).
class InputError : public Error {
public:
    using Error::Error;
};

/// Errors raised by numerical breakdown (factorization, solves, integration).
class NumericalError : public Error {
public:
    using Error::Error;
};

class DimensionMismatch : public InputError {
public:
    using InputError::InputError;
};

class InvalidArgument : public InputError {
public:
    using InputError::InputError;
};

class NonZeroMean : public InputError {
public:
    using InputError::InputError;
};

class InvalidProbs : public InputError {
public:
    using InputError::InputError;
};

class UnsupportedOrder : public InputError {
public:
    using InputError::InputError;
};

class AdditiveOrderUnsupported : public InputError {
public:
    using InputError::InputError;
};

class ConfigError : public InputError {
public:
    using InputError::InputError;
};

class IndefiniteMatrix : public NumericalError {
public:
    using NumericalError::NumericalError;
};

class UnsupportedDimension : public NumericalError {
public:
    using NumericalError::NumericalError;
};

class SingularSystem : public NumericalError {
public:
    using NumericalError::NumericalError;
};

class PredictFailure : public NumericalError {
public:
    using NumericalError::NumericalError;
};

class DegenerateGeometry : public NumericalError {
public:
    using NumericalError::NumericalError;
};

class SingularPotential : public NumericalError {
public:
    using NumericalError::NumericalError;
};

class StepUnderflow : public NumericalError {
public:
    using NumericalError::NumericalError;
};

class IoError : public Error {
public:
    using Error::Error;
};

} // namespace polyfilter
