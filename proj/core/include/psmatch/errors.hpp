#pragma once

#include <stdexcept>
#include <string>

namespace psmatch {

/// Base class for all errors raised by this library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed or inconsistent configuration (study config, scenario spec,
/// evaluation parameters).
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// Bad input data: schema mismatches, parse failures, out-of-range
/// arguments, missing outcomes on matched rows.
class DataError : public Error {
 public:
  using Error::Error;
};

/// Methodological failure of a model or matching step: probit separation,
/// singular Hessian, degenerate training labels, exhausted matching pool.
class ModelError : public Error {
 public:
  using Error::Error;
};

}  // namespace psmatch
