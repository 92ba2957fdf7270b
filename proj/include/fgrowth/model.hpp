#pragma once

// Division-rate models, discretization grids and density fields.

#include <array>
#include <optional>
#include <variant>
#include <vector>

#include "fgrowth/two_phase.hpp"

namespace fgrowth {

/// Relative tolerance used when reducing times and ages onto period and grid edges.
inline constexpr double kEdgeTolerance = 1e-12;

/// T-periodic time modulation psi(t) of the division rate.
///
/// Square waves equal 1 on [0, tau) and 0 on [tau, T); the shifted variant adds
/// a constant epsilon everywhere. Times are reduced modulo the period before
/// any comparison, and phases within kEdgeTolerance*T of a window edge are
/// snapped onto it, so values at t and t + T agree exactly.
class TimeModulation {
 public:
  struct Constant {
    double level;
  };
  struct SquareWave {
    double tau;
  };
  struct ShiftedSquareWave {
    double tau;
    double epsilon;
  };
  using Shape = std::variant<Constant, SquareWave, ShiftedSquareWave>;

  static TimeModulation constant(double level, double period = 1.0);
  static TimeModulation square_wave(double tau, double period);
  static TimeModulation shifted_square_wave(double tau, double period, double epsilon);

  double operator()(double t) const;

  /// Exact integral of psi over [t0, t1].
  double integral(double t0, double t1) const;

  /// First discontinuity strictly after t; +infinity for a constant.
  double next_break(double t) const;

  /// Phase of t in [0, T).
  double phase(double t) const;

  double period() const { return period_; }
  const Shape& shape() const { return shape_; }
  bool is_constant() const { return std::holds_alternative<Constant>(shape_); }
  /// Window length for square shapes.
  std::optional<double> tau() const;
  double epsilon() const;
  double max_value() const;
  double min_value() const;

  /// Same shape with a different window length (no-op for constants).
  TimeModulation with_tau(double tau) const;
  /// Same shape with a different period.
  TimeModulation with_period(double period) const;

 private:
  TimeModulation(Shape shape, double period);

  Shape shape_;
  double period_;
};

/// Age modulation B(x) of the division rate: identically one, or piecewise
/// constant with value samples[j] on [j*h, (j+1)*h) and the last sample beyond.
class AgeModulation {
 public:
  static AgeModulation one();
  /// Throws ModelError for empty/nonpositive samples, or when
  /// `nondecreasing` is set but the samples decrease somewhere.
  static AgeModulation tabulated(std::vector<double> samples, double spacing,
                                 bool nondecreasing = false);

  double operator()(double x) const;
  double next_break(double x) const;

  bool is_one() const { return samples_.empty(); }
  bool nondecreasing() const { return nondecreasing_; }
  const std::vector<double>& samples() const { return samples_; }
  double spacing() const { return spacing_; }
  double max_value() const;

 private:
  AgeModulation() = default;
  std::vector<double> samples_;
  double spacing_ = 0.0;
  bool nondecreasing_ = true;
};

/// K(t,x) = kappa * psi(t) * B(x) * 1[x >= a].
class DivisionKernel {
 public:
  DivisionKernel(double kappa, TimeModulation psi, AgeModulation B, double a);

  double rate(double t, double x) const;
  /// Integral of K(t0 + y, age0 + y) for y in [0, duration]; exact.
  double characteristic_integral(double t0, double age0, double duration) const;

  double kappa() const { return kappa_; }
  const TimeModulation& psi() const { return psi_; }
  const AgeModulation& B() const { return B_; }
  double a() const { return a_; }
  double period() const { return psi_.period(); }

  DivisionKernel with_kappa(double kappa) const;
  DivisionKernel with_psi(TimeModulation psi) const;
  DivisionKernel with_a(double a) const;

 private:
  double kappa_;
  TimeModulation psi_;
  AgeModulation B_;
  double a_;
};

/// Birth-phase ("birth day penalty") kernel
/// K(t,x) = chi_1(t-x) K_1(t) + chi_2(t-x) K_2(t) with day/night constant rates.
class BirthPhaseKernel {
 public:
  explicit BirthPhaseKernel(TwoPhaseRates rates);

  double rate(double t, double x) const;
  double characteristic_integral(double t0, double age0, double duration) const;

  const TwoPhaseRates& rates() const { return rates_; }
  double period() const { return 1.0; }

  /// True when the phase of t lies in the day [0, alpha).
  bool is_day(double t) const;

 private:
  TwoPhaseRates rates_;
  TimeModulation day_;  // indicator of the day as a square wave
};

using Kernel = std::variant<DivisionKernel, BirthPhaseKernel>;

double eval_kernel(const Kernel& k, double t, double x);
double characteristic_integral(const Kernel& k, double t0, double age0, double duration);
double kernel_period(const Kernel& k);
/// Age below which the kernel vanishes (0 for the birth-phase kernel).
double majority_age(const Kernel& k);

/// Integral of K(s, s - v) for s in [v, t]: cumulative hazard at time t of
/// an individual born at time v. Throws ModelError unless 0 <= v <= t.
double survival_integral(const Kernel& k, double v, double t);

/// Uniform age/time grid with dt = dx.
class Grid {
 public:
  /// Throws ModelError unless dx > 0, steps_per_period >= 1 and x_max/dx is a
  /// positive integer.
  Grid(double dx, double x_max, long steps_per_period);

  /// Grid of one period split into `steps_per_period` steps. A missing x_max
  /// defaults to majority age + 3 periods.
  static Grid for_kernel(const Kernel& k, long steps_per_period,
                         std::optional<double> x_max = std::nullopt);

  double dx() const { return dx_; }
  double dt() const { return dx_; }
  double x_max() const { return x_max_; }
  long nodes() const { return nodes_; }
  long steps_per_period() const { return steps_per_period_; }
  double period() const { return dx_ * static_cast<double>(steps_per_period_); }

  double age(long j) const { return dx_ * static_cast<double>(j); }
  double time(long k) const { return dx_ * static_cast<double>(k); }
  /// Index of a grid time; throws ModelError when t is not on the grid.
  long step_index(double t) const;
  /// Nearest age node.
  long nearest_node(double x) const;

 private:
  double dx_;
  double x_max_;
  long nodes_;
  long steps_per_period_;
};

/// Nonnegative cell averages n_j on [j dx, (j+1) dx), plus the mass that has
/// left the truncated age domain.
struct DensityField {
  std::vector<double> values;
  double time = 0.0;
  double dx = 0.0;
  double lost_mass = 0.0;

  /// L1 mass on the grid: dx * sum(values).
  double mass() const;

  static DensityField zeros(const Grid& grid, double time = 0.0);
  /// Unit-height indicator of ages in [x_lo, x_hi) (cells whose left edge is inside).
  static DensityField indicator(const Grid& grid, double x_lo, double x_hi);
};

/// Kernel snapped onto a grid, with how far the edges moved.
struct GridAlignment {
  Kernel kernel;
  double age_shift = 0.0;   ///< snapped a minus requested a
  double time_shift = 0.0;  ///< snapped window edge minus requested edge
};

/// Snaps the majority age to the nearest age node and the window edge (tau or
/// alpha) to the nearest time node. Throws ModelError when the kernel period
/// differs from the grid period (constant psi is exempt).
GridAlignment align_to_grid(const Kernel& k, const Grid& grid);

struct MonotonicityReport {
  bool holds = true;
  /// (v, v', t) with v < v' and survival_integral(v', t) > survival_integral(v, t).
  std::optional<std::array<double, 3>> witness;
  double worst_increase = 0.0;
};

/// Checks that v -> survival_integral(k, v, t) is nonincreasing for every
/// grid time t <= horizon (equivalently, the survival probability
/// exp(-integral) is nondecreasing in the birth time), up to 1e-12.
MonotonicityReport check_monotonicity_condition(const Kernel& k, const Grid& grid,
                                                double horizon);

}  // namespace fgrowth
