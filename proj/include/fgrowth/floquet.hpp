#pragma once

// Floquet eigenvalue by power iteration on the one-period monodromy.

#include <optional>
#include <vector>

#include "fgrowth/model.hpp"

namespace fgrowth {

struct FloquetOptions {
  double tol = 1e-10;
  long max_iter = 10000;
  /// Store the eigenprofile over the final period (disable for sweeps).
  bool keep_profile = true;
  /// Arnoldi acceleration: once krylov_after periods have passed without
  /// convergence, a cycle of krylov_dim periods replaces the iterate by the
  /// clipped dominant Ritz vector, then krylov_every power periods follow
  /// before the next cycle. krylov_dim = 0 disables it.
  long krylov_dim = 24;
  long krylov_after = 40;
  long krylov_every = 8;
  /// Starting iterate; defaults to the indicator of [a, x_max].
  std::optional<DensityField> initial;
};

struct FloquetResult {
  double lambda = 0.0;
  /// N(t_k, .) = n(t_k, .) exp(-lambda t_k) for k = 0..steps_per_period-1,
  /// scaled so that (1/T) sum_k sum_j N dx dt = 1.
  std::vector<DensityField> eigenprofile;
  /// Normalized iterate at the start of the period (unit L1 mass).
  DensityField iterate;
  double residual = 0.0;
  long iterations = 0;
  /// Fraction of the iterate lost through x_max during the last period.
  double lost_mass = 0.0;
};

/// Power iteration with L1 normalization every period. lambda averages
/// log(growth)/T over the last three periods; residual is the L1 distance
/// between successive normalized iterates.
///
/// Throws NonConverged after max_iter periods and Degenerate when the
/// iterate loses all of its mass.
FloquetResult floquet_eigen(const Kernel& k, const Grid& grid, const FloquetOptions& opts = {});

struct AdjointResult {
  /// phi(t_k, .) for k = 0..steps_per_period-1, jointly normalized with the
  /// direct eigenprofile: (1/T) sum_k sum_j N phi dx dt = 1.
  std::vector<std::vector<double>> phi;
  double lambda_check = 0.0;
  double residual = 0.0;
  long iterations = 0;
};

/// Backward power iteration with the exact transpose of the direct scheme.
/// `direct` must come from floquet_eigen with keep_profile on the same kernel and grid.
AdjointResult adjoint_floquet(const FloquetResult& direct, const Kernel& k, const Grid& grid,
                              const FloquetOptions& opts = {});

/// sum_j N(t_k, x_j) phi(t_k, x_j) dx for each stored time.
std::vector<double> duality_products(const FloquetResult& direct, const AdjointResult& adjoint);

}  // namespace fgrowth
