#pragma once

#include <stdexcept>
#include <string>

namespace qpl {

// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Predictor grid too coarse for the trapezoidal fixed-point march (h*L >= 1).
class GridTooCoarse : public Error {
 public:
  using Error::Error;
};

// A trajectory, predictor or quantizer input left the finite doubles.
class NonFinite : public Error {
 public:
  using Error::Error;
};

// delta outside (0, min{sigma, nu}).
class InvalidDelta : public Error {
 public:
  using Error::Error;
};

// No (eps, nu) pair on the search grid satisfies the small-gain inequality.
class Infeasible : public Error {
 public:
  using Error::Error;
};

// The delay-free nominal loop does not decay; no GES certificate exists.
class NotContracting : public Error {
 public:
  using Error::Error;
};

// Inconsistent or unparsable scenario configuration.
class ConfigError : public Error {
 public:
  using Error::Error;
};

}  // namespace qpl
