#pragma once

#include <stdexcept>
#include <string>

namespace bearingreg {

/// Base class for all library errors.
class Error : public std::runtime_error {
public:
    explicit Error(const std::string& what) : std::runtime_error(what) {}
};

/// Bad user input: non-finite values, mismatched sizes, invalid settings.
class InvalidArgumentError : public Error {
public:
    explicit InvalidArgumentError(const std::string& what) : Error(what) {}
};

/// Scenario or file configuration problems (CLI exit code 2).
class ConfigError : public Error {
public:
    explicit ConfigError(const std::string& what) : Error(what) {}
};

/// Triangulation or Jacobian geometry too close to a singular configuration.
class DegenerateGeometryError : public Error {
public:
    explicit DegenerateGeometryError(const std::string& what) : Error(what) {}
};

/// Fewer sensors than the pairing scheme needs for bias observability.
class InsufficientSensorsError : public Error {
public:
    explicit InsufficientSensorsError(const std::string& what) : Error(what) {}
};

/// Empty measurement set where at least one element is required.
class NoDataError : public Error {
public:
    explicit NoDataError(const std::string& what) : Error(what) {}
};

/// A covariance that must be positive definite is not.
class InvalidCovarianceError : public Error {
public:
    explicit InvalidCovarianceError(const std::string& what) : Error(what) {}
};

/// Fisher information is singular; some bias direction is unobservable.
class UnobservableBiasError : public Error {
public:
    explicit UnobservableBiasError(const std::string& what) : Error(what) {}
};

/// Numerical breakdown inside a filter or solver.
class NumericalFailureError : public Error {
public:
    explicit NumericalFailureError(const std::string& what) : Error(what) {}
};

} // namespace bearingreg
