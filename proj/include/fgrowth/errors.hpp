#pragma once

#include <stdexcept>
#include <string>

namespace fgrowth {

/// Invalid model, grid or descriptor input.
class ModelError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// An iterative solver stopped at its iteration cap.
class NonConverged : public std::runtime_error {
 public:
  NonConverged(const std::string& what, long iterations, double residual,
               double last_estimate)
      : std::runtime_error(what),
        iterations_(iterations),
        residual_(residual),
        last_estimate_(last_estimate) {}

  long iterations() const { return iterations_; }
  double residual() const { return residual_; }
  double last_estimate() const { return last_estimate_; }

 private:
  long iterations_;
  double residual_;
  double last_estimate_;
};

/// The iterate lost all of its mass (e.g. a division rate that is zero at all times).
class Degenerate : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A bracketing root search found no sign change.
class NoRoot : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace fgrowth
