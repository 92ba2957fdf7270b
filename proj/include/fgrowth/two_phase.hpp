#pragma once

namespace fgrowth {

/// Day/night division rates of the birth-phase model.
///
/// Time is measured in periods of length one; the day is [0, alpha). An
/// individual born during the day divides at rate a1 by day and b1 by night,
/// one born at night at rate a2 by day and b2 by night.
struct TwoPhaseRates {
  double alpha = 0.5;
  double a1 = 0.0;
  double a2 = 0.0;
  double b1 = 0.0;
  double b2 = 0.0;

  /// Throws ModelError unless 0 < alpha < 1 and every rate is finite and >= 0.
  void validate() const;
};

}  // namespace fgrowth
