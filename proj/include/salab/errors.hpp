#pragma once

#include <stdexcept>
#include <string>

namespace salab {

// Base class for all recoverable errors raised by the library. The CLI maps
// ConfigError to exit code 1 and everything else to exit code 2.
struct Error : std::runtime_error {
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

struct ConfigError : Error {
    using Error::Error;
};

struct NotHurwitz : Error {
    using Error::Error;
};
struct NotSpd : Error {
    using Error::Error;
};
struct NotPsd : Error {
    using Error::Error;
};
struct SolverDivergence : Error {
    using Error::Error;
};
struct Reducible : Error {
    using Error::Error;
};
struct NotCentered : Error {
    using Error::Error;
};
struct SingularSystem : Error {
    using Error::Error;
};
struct NumericalBlowup : Error {
    using Error::Error;
};
struct DegeneratePartition : Error {
    using Error::Error;
};
struct SingularGamma : Error {
    using Error::Error;
};
struct MissingPath : Error {
    using Error::Error;
};
struct StepTooLarge : Error {
    using Error::Error;
};
struct UnequalSizes : Error {
    using Error::Error;
};
struct SizeLimit : Error {
    using Error::Error;
};
struct DimensionMismatch : Error {
    using Error::Error;
};
struct InsufficientCheckpoints : ConfigError {
    using ConfigError::ConfigError;
};
struct BadExponent : ConfigError {
    using ConfigError::ConfigError;
};
struct EnsembleTooSmall : ConfigError {
    using ConfigError::ConfigError;
};
struct WrongNoiseKind : ConfigError {
    using ConfigError::ConfigError;
};
struct NotStronglyConvex : ConfigError {
    using ConfigError::ConfigError;
};
struct BadParameters : ConfigError {
    using ConfigError::ConfigError;
};

}  // namespace salab
