#pragma once

#include <optional>
#include <stdexcept>
#include <string>

namespace mlreg {

// Bad input to any toolkit operation.
struct ValidationError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

// Operation declines because the request is out of numerical reach.
struct RefusedError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// File could not be read or written.
struct IoError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct ClassParams {
  double tau = 1.0;
  double sigma = 2.0;
  std::optional<double> tau_tilde;

  static ClassParams make(double tau, double sigma);
  // Same as make() but also requires sigma > 1.
  static ClassParams detector(double tau, double sigma);
};

}  // namespace mlreg
