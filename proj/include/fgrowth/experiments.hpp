#pragma once

// Batch sweeps behind the floquet-growth command line tool.

#include <functional>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "fgrowth/floquet.hpp"
#include "fgrowth/model.hpp"

namespace fgrowth {

/// Worker count: FG_THREADS when set to a positive integer, else the
/// hardware concurrency (at least 1).
unsigned worker_count();

/// Runs fn(i) for i in [0, n) on up to `workers` threads. Exceptions
/// escaping fn are rethrown after all workers finish.
void parallel_for(std::size_t n, unsigned workers, const std::function<void(std::size_t)>& fn);

/// printf("%.12g"); "nan" and "inf" spelled out.
std::string format_number(double v);

/// from, from + step, ... up to `to` inclusive (within step * 1e-9).
std::vector<double> range_values(double from, double to, double step);

struct SweepPoint {
  double a = 0.0;
  double kappa = 0.0;
  double epsilon = 0.0;
};

struct SweepRow {
  SweepPoint point;  ///< a is the grid-snapped value actually solved
  double lambda = NAN;
  double residual = NAN;
  long iterations = 0;
  double lost_mass = NAN;
  std::string status;  ///< ok, non_converged, degenerate or error
};

/// One Floquet solve per point on `base` with a, kappa (and epsilon when
/// positive, turning a square wave into a shifted one) replaced. Grids have
/// `steps_per_period` steps per period and x_max = a + x_extent (default
/// 3 periods). Rows come back in point order whatever the thread count.
std::vector<SweepRow> floquet_sweep(const DivisionKernel& base, long steps_per_period,
                                    const std::vector<SweepPoint>& points,
                                    const FloquetOptions& opts, unsigned workers,
                                    std::optional<double> x_extent = std::nullopt);

/// CSV with header a,kappa,lambda,residual,iterations,lost_mass,status.
std::string sweep_csv(const std::vector<SweepRow>& rows);

struct LimitsProbe {
  std::vector<double> epsilons;
  std::vector<double> kappas;
  /// rows[i * kappas.size() + j] at (epsilons[i], kappas[j])
  std::vector<SweepRow> rows;
  double log2_over_a = 0.0;
  double lambda_inf = 0.0;
  /// lambda at the largest kappa and the largest epsilon: kappa taken large first.
  double kappa_first = NAN;
  /// lambda at the largest kappa and the smallest epsilon: epsilon taken small first.
  double epsilon_first = NAN;
  double gap = NAN;            ///< kappa_first - epsilon_first
  double reference_gap = 0.0;  ///< log 2 / a - lambda_inf
  /// lambda nondecreasing along both axes among converged cells, up to 2 dx.
  bool monotone = true;

  const SweepRow& at(std::size_t i, std::size_t j) const { return rows[i * kappas.size() + j]; }
};

/// Floquet eigenvalues on the (epsilon, kappa) table for psi = square wave
/// (tau, T) shifted by epsilon. Lists must be nonempty and ascending.
LimitsProbe noncommuting_limits_probe(double a, double tau, double T,
                                      const std::vector<double>& eps_list,
                                      const std::vector<double>& kappa_list,
                                      long steps_per_period, const FloquetOptions& opts,
                                      unsigned workers);

nlohmann::json to_json(const LimitsProbe& probe);

/// A registered or user-written experiment.
///
/// kind "floquet_sweep": Floquet eigenvalues over a x kappa (x epsilon) with
/// a reference curve (staircase limit for square waves, log 2 / a for
/// constant psi). kind "counterexample_surface": two-phase growth rate over
/// a (b1, b2) grid.
struct ExperimentSpec {
  std::string name;
  std::string kind = "floquet_sweep";

  // floquet_sweep
  std::string psi = "square_wave";  ///< square_wave or constant
  double tau = 0.5;
  double period = 1.0;
  std::vector<double> a_values;
  std::vector<double> kappa_values;
  std::vector<double> epsilon_values;
  long steps_per_period = 600;
  std::optional<double> x_extent;
  /// Shift sampled ages by +1e-6 off exact rational step edges unless set.
  bool exact_edges = false;
  double tol = 1e-10;
  long max_iter = 10000;

  // counterexample_surface
  double a1 = 10.0;
  double a2 = 0.1;
  double alpha = 0.5;
  std::pair<double, double> b1_range{0.0, 5.0};
  std::pair<double, double> b2_range{0.0, 5.0};
  long resolution = 51;

  std::string output_dir = ".";
};

std::vector<std::string> template_names();
/// Throws ModelError for an unknown name.
ExperimentSpec experiment_template(const std::string& name);

/// Either {"template": name, ...overrides} or a full spec. Unknown fields are
/// rejected. Ranges are {"from", "to", "step"} objects or explicit arrays.
ExperimentSpec parse_experiment(const nlohmann::json& j);

struct RunReport {
  std::vector<std::string> files;
  long points = 0;
  long failures = 0;  ///< points whose status is not ok
};

/// Writes the data files and a gnuplot script into spec.output_dir.
RunReport run_experiment(const ExperimentSpec& spec, unsigned workers);

}  // namespace fgrowth
