#pragma once

// Densities split by the number of past divisions: n = sum_i 2^i n_i.

#include <array>
#include <functional>
#include <optional>
#include <vector>

#include "fgrowth/model.hpp"

namespace fgrowth {

struct GenerationOptions {
  /// Highest generation kept; defaults to ceil(horizon / max(a, dx)) + 2.
  std::optional<long> i_max;
  /// Called at every grid time with the current generations (k = 0 included).
  std::function<void(long k, const std::vector<DensityField>& generations)> observer;
};

/// Per-step record of a generational solve. Row k refers to grid time t_k.
struct GenerationStack {
  Grid grid;
  long i_max = 0;
  /// Grid step index of the initial time; row k is grid step first_step + k.
  long first_step = 0;
  long steps = 0;
  /// Some inflow into generation i_max + 1 was dropped.
  bool truncated = false;
  /// mass[k][i] = dx sum_x n_i(t_k, x)
  std::vector<std::vector<double>> mass;
  /// trace[k][i] = n_i(t_k, 0), the boundary cell
  std::vector<std::vector<double>> trace;
  /// lost[k][i] = mass of generation i that left through x_max by t_k
  std::vector<std::vector<double>> lost;
  std::vector<DensityField> final_state;
};

/// Runs every generation with the step factors of the direct scheme from
/// n0.time over `horizon` (a duration, a multiple of dt).
/// Generation i >= 1 receives the mass that generation i-1 absorbs over the
/// step (no factor 2); generation 0 receives nothing.
GenerationStack solve_generations(const DensityField& n0, const Kernel& k, const Grid& grid,
                                  double horizon, const GenerationOptions& opts = {});

/// sum_i 2^i n_i, with lost mass weighted the same way.
DensityField reaggregate(const std::vector<DensityField>& generations);

/// S_j(t) = sum_{i >= j} (mass + lost mass) of generation i at grid time t.
double S_tail(const GenerationStack& stack, long j, double t);

/// Closed form of S_j(t), j >= 1.
///
/// j = 1: sum_x n0(x) (1 - exp(-int_0^t K(s, x + s) ds)) dx from the initial data.
/// j >= 2: sum_{s <= t} n_{j-1}(s, 0) (1 - exp(-int_0^{t-s} K(s + y, y) dy)) dx
/// from the recorded traces. Ages are cell midpoints.
double S_closed_form(const GenerationStack& stack, const DensityField& n0, const Kernel& k,
                     long j, double t);

struct OrderingReport {
  bool holds = true;
  /// (j, t, S_j under k1, S_j under k2) of the first violation.
  std::optional<std::array<double, 4>> witness;
  /// Whether k1 satisfies the monotonicity condition over the horizon.
  bool k1_monotone = true;
  long i_max = 0;
};

/// Checks S_j^2(t) >= S_j^1(t) - 1e-9 for every grid time t <= horizon and
/// j <= i_max, with masses normalized to int n0 = 1. Throws ModelError when
/// k2 < k1 somewhere on the grid.
OrderingReport stochastic_order_check(const Kernel& k1, const Kernel& k2, const DensityField& n0,
                                      const Grid& grid, double horizon,
                                      std::optional<long> i_max = std::nullopt);

}  // namespace fgrowth
