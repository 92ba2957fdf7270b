#pragma once

// Semi-analytic growth rates: the two-phase birth-time model, the constant
// modulation eigen-equation and the periodic renewal operator.

#include <array>
#include <utility>
#include <vector>

#include "fgrowth/matrix2.hpp"
#include "fgrowth/model.hpp"
#include "fgrowth/two_phase.hpp"

namespace fgrowth {

/// Day generator [[a1, 2 a2], [0, -a2]] acting on (born by day, born at night).
Matrix2 day_generator(const TwoPhaseRates& r);
/// Night generator [[-b1, 0], [2 b1, b2]].
Matrix2 night_generator(const TwoPhaseRates& r);

/// exp((1 - alpha) M_night) exp(alpha M_day).
Matrix2 two_phase_monodromy(const TwoPhaseRates& r);

/// log of the Perron root of the one-period monodromy.
double counterexample_lambda(const TwoPhaseRates& r);

struct RateSurface {
  std::vector<double> b1;
  std::vector<double> b2;
  /// lambda[i][j] at (b1[i], b2[j])
  std::vector<std::vector<double>> lambda;
};

/// counterexample_lambda on a uniform (resolution x resolution) grid of
/// (b1, b2) including both range ends.
RateSurface counterexample_surface(double a1, double a2, std::pair<double, double> b1_range,
                                   std::pair<double, double> b2_range, long resolution,
                                   double alpha = 0.5);

struct AggregatedTrajectory {
  /// Phase boundaries 0, alpha, 1, 1 + alpha, ...
  std::vector<double> times;
  /// (P1, P2) at those times, each scaled to unit sum.
  std::vector<std::array<double, 2>> direction;
  /// log(P1 + P2) at those times.
  std::vector<double> log_mass;
  /// log of the mass ratio over the last period.
  double growth_rate = 0.0;
};

/// Piecewise-exact evolution of the aggregated two-phase system.
AggregatedTrajectory aggregated_ode_simulate(const TwoPhaseRates& r, long periods,
                                             std::array<double, 2> P0 = {1.0, 1.0});

/// Root mu of 2 int_a^inf k B(x) exp(-mu x - k int_a^x B) dx = 1 with k =
/// kappa_alpha, found by bisection to 1e-13. For B = 1 the equation reads
/// 2 k exp(-mu a) = mu + k. Throws ModelError for kappa_alpha <= 0.
double constant_psi_lambda(double kappa_alpha, const AgeModulation& B, double a);

struct RenewalCutoff {
  double weight = 1e-14;
  long min_periods = 10;
};

/// Spectral radius of the periodic renewal operator
///   P(t) = 2 int_a^inf K(t-x, x) P(t-x) exp(-lambda x - int_a^x K(t-x+s, s) ds) dx,
/// discretized on `time_nodes` cells per period (midpoint rule in age). The
/// age integral is cut once every integrand weight drops below cut.weight and
/// covers at least cut.min_periods periods. Throws NonConverged.
double renewal_rho(const DivisionKernel& k, double lambda, long time_nodes,
                   const RenewalCutoff& cut = {});

/// Root of renewal_rho(lambda) = 1 on (1e-8, log 2 / a] by bisection.
double renewal_lambda(const DivisionKernel& k, long time_nodes, double tol = 1e-9);

}  // namespace fgrowth
