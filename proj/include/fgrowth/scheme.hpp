#pragma once

// Unit-CFL characteristic scheme for dn/dt + dn/dx + K n = 0, n(t,0) = 2 int K n.

#include <vector>

#include "fgrowth/model.hpp"

namespace fgrowth {

/// Per-step survival and division factors of every age cell.
///
/// During step k (from t_k to t_k + dt) cell j moves along the characteristic
/// through its midpoint; Lambda_j is the exact integral of K along that
/// segment, survival_j = exp(-Lambda_j) and division_j = 1 - survival_j.
class StepFactors {
 public:
  StepFactors(Kernel kernel, Grid grid);

  struct View {
    const double* survival;
    const double* division;
  };

  /// Factors for step k. The buffers are used only when the factors are not
  /// cached (time-dependent age structure), so concurrent callers must pass
  /// their own buffers.
  View at(long k, std::vector<double>& survival_buf, std::vector<double>& division_buf) const;

  const Kernel& kernel() const { return kernel_; }
  const Grid& grid() const { return grid_; }

 private:
  struct Level {
    double psi_mean;
    std::vector<double> survival;
    std::vector<double> division;
  };

  Kernel kernel_;
  Grid grid_;
  bool cached_ = false;
  std::vector<double> unit_hazard_;  // Lambda_j for psi == 1 during the step
  std::vector<Level> levels_;
  std::vector<int> level_of_phase_;  // indexed by k mod steps_per_period
};

/// Rejects NaN, negative entries and a size mismatch with the grid.
void validate_density(const DensityField& n, const Grid& grid);

/// Scheme applied repeatedly with one set of precomputed factors.
class Propagator {
 public:
  Propagator(const Kernel& kernel, const Grid& grid);

  /// Advances n by one step starting at grid time n.time.
  void advance(DensityField& n) const;
  /// Advances n by one period.
  void advance_period(DensityField& n) const;

  const StepFactors& factors() const { return factors_; }
  const Grid& grid() const { return factors_.grid(); }

 private:
  StepFactors factors_;
  mutable std::vector<double> survival_buf_;
  mutable std::vector<double> division_buf_;
};

/// One dt advance of n from grid time t. The new boundary cell receives twice
/// the mass absorbed over the step; the cell leaving the age domain is added
/// to lost_mass. Throws ModelError for invalid input or an off-grid t.
DensityField step(const DensityField& n, const Kernel& k, const Grid& grid, double t);

/// Advance over one period starting from n0.time.
DensityField monodromy(const DensityField& n0, const Kernel& k, const Grid& grid);

}  // namespace fgrowth
