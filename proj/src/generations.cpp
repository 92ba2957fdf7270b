#include "fgrowth/generations.hpp"

#include <algorithm>
#include <cmath>

#include "fgrowth/errors.hpp"
#include "fgrowth/scheme.hpp"

namespace fgrowth {

namespace {

long steps_to(const Grid& grid, double horizon) {
  if (!(horizon >= 0.0)) throw ModelError("horizon must be >= 0");
  return grid.step_index(horizon);
}

long row_of(const GenerationStack& stack, double t) {
  const long k = stack.grid.step_index(t) - stack.first_step;
  if (k < 0 || k > stack.steps) throw ModelError("time lies past the solved horizon");
  return k;
}

}  // namespace

GenerationStack solve_generations(const DensityField& n0, const Kernel& k, const Grid& grid,
                                  double horizon, const GenerationOptions& opts) {
  validate_density(n0, grid);
  const long K = steps_to(grid, horizon);
  const long k0 = grid.step_index(n0.time);
  const double a_eff = std::max(majority_age(k), grid.dx());
  const long i_max =
      opts.i_max ? *opts.i_max : static_cast<long>(std::ceil(horizon / a_eff - 1e-9)) + 2;
  if (i_max < 0) throw ModelError("i_max must be >= 0");

  const StepFactors factors(k, grid);
  const auto J = static_cast<std::size_t>(grid.nodes());
  const auto G = static_cast<std::size_t>(i_max + 1);
  const double dx = grid.dx();

  GenerationStack out{grid, i_max, k0, K, false, {}, {}, {}, {}};
  std::vector<DensityField> gens(G, DensityField::zeros(grid, n0.time));
  gens[0].values = n0.values;
  std::vector<double> births(G);
  std::vector<double> cumulative_lost(G, 0.0);
  std::vector<double> sbuf;
  std::vector<double> dbuf;
  std::size_t active = 1;  // generations above this index are still empty

  auto record = [&](long kk) {
    std::vector<double> m(G);
    std::vector<double> tr(G);
    for (std::size_t i = 0; i < G; ++i) {
      m[i] = gens[i].mass();
      tr[i] = gens[i].values[0];
    }
    out.mass.push_back(std::move(m));
    out.trace.push_back(std::move(tr));
    out.lost.push_back(cumulative_lost);
    if (opts.observer) opts.observer(kk, gens);
  };

  record(0);
  for (long s = 0; s < out.steps; ++s) {
    const auto view = factors.at(k0 + s, sbuf, dbuf);
    for (std::size_t i = 0; i < active; ++i) {
      double* v = gens[i].values.data();
      double b = 0.0;
      for (std::size_t j = 0; j < J; ++j) b += v[j] * view.division[j];
      births[i] = b;
      const double leaving = v[J - 1] * view.survival[J - 1] * dx;
      gens[i].lost_mass += leaving;
      cumulative_lost[i] += leaving;
      for (std::size_t j = J - 1; j > 0; --j) v[j] = v[j - 1] * view.survival[j - 1];
      v[0] = 0.0;
    }
    const std::size_t was_active = active;
    for (std::size_t i = 0; i < was_active; ++i) {
      if (i + 1 < G) {
        gens[i + 1].values[0] = births[i];
        if (births[i] > 0.0) active = std::max(active, i + 2);
      } else if (births[i] > 0.0) {
        out.truncated = true;
      }
    }
    for (auto& g : gens) g.time = grid.time(k0 + s + 1);
    record(s + 1);
  }
  out.final_state = std::move(gens);
  return out;
}

DensityField reaggregate(const std::vector<DensityField>& generations) {
  if (generations.empty()) throw ModelError("no generations to reaggregate");
  DensityField out = generations.front();
  std::fill(out.values.begin(), out.values.end(), 0.0);
  out.lost_mass = 0.0;
  double w = 1.0;
  for (const auto& g : generations) {
    for (std::size_t j = 0; j < out.values.size(); ++j) out.values[j] += w * g.values[j];
    out.lost_mass += w * g.lost_mass;
    w *= 2.0;
  }
  return out;
}

double S_tail(const GenerationStack& stack, long j, double t) {
  if (j < 0) throw ModelError("generation index must be >= 0");
  const auto& mass = stack.mass.at(static_cast<std::size_t>(row_of(stack, t)));
  const auto& lost = stack.lost.at(static_cast<std::size_t>(row_of(stack, t)));
  double s = 0.0;
  for (std::size_t i = static_cast<std::size_t>(j); i < mass.size(); ++i) s += mass[i] + lost[i];
  return s;
}

double S_closed_form(const GenerationStack& stack, const DensityField& n0, const Kernel& k,
                     long j, double t) {
  if (j < 1) throw ModelError("closed form needs j >= 1");
  const Grid& grid = stack.grid;
  const long K = row_of(stack, t);
  const double dx = grid.dx();
  const double t0 = grid.time(stack.first_step);
  const double t_end = grid.time(stack.first_step + K);

  if (j == 1) {
    double s = 0.0;
    for (std::size_t x = 0; x < n0.values.size(); ++x) {
      if (n0.values[x] == 0.0) continue;
      const double age = (static_cast<double>(x) + 0.5) * dx;
      s += n0.values[x] * -std::expm1(-characteristic_integral(k, t0, age, t_end - t0));
    }
    return s * dx;
  }
  if (j - 1 > stack.i_max) throw ModelError("no trace recorded for that generation");
  const auto g = static_cast<std::size_t>(j - 1);
  const long k0 = stack.first_step;
  double s = 0.0;
  for (long m = 1; m <= K; ++m) {
    const double inflow = stack.trace[static_cast<std::size_t>(m)][g];
    if (inflow == 0.0) continue;
    const double tm = grid.time(k0 + m);
    s += inflow * -std::expm1(-characteristic_integral(k, tm, 0.5 * dx, t_end - tm));
  }
  return s * dx;
}

OrderingReport stochastic_order_check(const Kernel& k1, const Kernel& k2, const DensityField& n0,
                                      const Grid& grid, double horizon,
                                      std::optional<long> i_max) {
  const long K = steps_to(grid, horizon);
  const long k0 = grid.step_index(n0.time);
  for (long kk = k0; kk <= k0 + K; ++kk) {
    const double t = grid.time(kk);
    for (long j = 0; j < grid.nodes(); ++j) {
      const double r1 = eval_kernel(k1, t, grid.age(j));
      const double r2 = eval_kernel(k2, t, grid.age(j));
      if (r2 < r1 - 1e-12 * std::max(1.0, std::abs(r1))) {
        throw ModelError("k2 >= k1 fails at t=" + std::to_string(t) +
                         ", x=" + std::to_string(grid.age(j)));
      }
    }
  }

  OrderingReport report;
  report.k1_monotone = check_monotonicity_condition(k1, grid, horizon).holds;

  const double m0 = n0.mass();
  if (!(m0 > 0.0)) throw ModelError("initial data must have positive mass");
  DensityField unit = n0;
  for (double& v : unit.values) v /= m0;

  GenerationOptions opts;
  if (!i_max) {
    const double a_eff = std::min(std::max(majority_age(k1), grid.dx()),
                                  std::max(majority_age(k2), grid.dx()));
    i_max = static_cast<long>(std::ceil(horizon / a_eff - 1e-9)) + 2;
  }
  opts.i_max = i_max;
  const GenerationStack s1 = solve_generations(unit, k1, grid, horizon, opts);
  const GenerationStack s2 = solve_generations(unit, k2, grid, horizon, opts);
  report.i_max = *i_max;

  for (long kk = k0; kk <= k0 + K; ++kk) {
    const double t = grid.time(kk);
    for (long j = 0; j <= *i_max; ++j) {
      const double a1 = S_tail(s1, j, t);
      const double a2 = S_tail(s2, j, t);
      if (a2 < a1 - 1e-9) {
        if (report.holds) {
          report.witness = std::array<double, 4>{static_cast<double>(j), t, a1, a2};
        }
        report.holds = false;
      }
    }
  }
  return report;
}

}  // namespace fgrowth
