#include "fgrowth/scheme.hpp"

#include <cmath>

#include "fgrowth/errors.hpp"

namespace fgrowth {

namespace {

double cell_mid(const Grid& g, long j) { return (static_cast<double>(j) + 0.5) * g.dx(); }

}  // namespace

StepFactors::StepFactors(Kernel kernel, Grid grid)
    : kernel_(std::move(kernel)), grid_(std::move(grid)) {
  const auto* d = std::get_if<DivisionKernel>(&kernel_);
  if (d == nullptr) return;

  // Cache when psi is constant over every step of the period: the hazard then
  // factors into a psi level times a fixed age profile.
  const TimeModulation& psi = d->psi();
  const long S = grid_.steps_per_period();
  const double dt = grid_.dt();
  if (!psi.is_constant()) {
    if (std::abs(psi.period() - grid_.period()) > 1e-9 * grid_.period()) return;
    for (long k = 0; k < S; ++k) {
      if (psi.next_break(grid_.time(k)) < grid_.time(k + 1) - 1e-9 * dt) return;
    }
  }

  const DivisionKernel unit(d->kappa(), TimeModulation::constant(1.0, grid_.period()), d->B(),
                            d->a());
  const auto J = static_cast<std::size_t>(grid_.nodes());
  unit_hazard_.resize(J);
  for (std::size_t j = 0; j < J; ++j) {
    unit_hazard_[j] = unit.characteristic_integral(0.0, cell_mid(grid_, static_cast<long>(j)), dt);
  }

  level_of_phase_.resize(static_cast<std::size_t>(S));
  for (long k = 0; k < S; ++k) {
    const double t = grid_.time(k);
    const double mean = psi.integral(t, t + dt) / dt;
    int found = -1;
    for (std::size_t l = 0; l < levels_.size(); ++l) {
      if (std::abs(levels_[l].psi_mean - mean) <= 1e-12 * std::max(1.0, mean)) {
        found = static_cast<int>(l);
        break;
      }
    }
    if (found < 0) {
      Level lv{mean, std::vector<double>(J), std::vector<double>(J)};
      for (std::size_t j = 0; j < J; ++j) {
        const double hazard = mean * unit_hazard_[j];
        lv.survival[j] = std::exp(-hazard);
        lv.division[j] = -std::expm1(-hazard);
      }
      levels_.push_back(std::move(lv));
      found = static_cast<int>(levels_.size() - 1);
    }
    level_of_phase_[static_cast<std::size_t>(k)] = found;
  }
  cached_ = true;
}

StepFactors::View StepFactors::at(long k, std::vector<double>& survival_buf,
                                  std::vector<double>& division_buf) const {
  if (cached_) {
    const long S = grid_.steps_per_period();
    const long phase = ((k % S) + S) % S;
    const Level& lv = levels_[static_cast<std::size_t>(level_of_phase_[static_cast<std::size_t>(phase)])];
    return {lv.survival.data(), lv.division.data()};
  }
  const auto J = static_cast<std::size_t>(grid_.nodes());
  survival_buf.resize(J);
  division_buf.resize(J);
  const double t = grid_.time(k);
  for (std::size_t j = 0; j < J; ++j) {
    const double hazard =
        characteristic_integral(kernel_, t, cell_mid(grid_, static_cast<long>(j)), grid_.dt());
    survival_buf[j] = std::exp(-hazard);
    division_buf[j] = -std::expm1(-hazard);
  }
  return {survival_buf.data(), division_buf.data()};
}

void validate_density(const DensityField& n, const Grid& grid) {
  if (static_cast<long>(n.values.size()) != grid.nodes()) {
    throw ModelError("density size does not match the grid");
  }
  for (double v : n.values) {
    if (!(v >= 0.0) || !std::isfinite(v)) throw ModelError("density must be finite and >= 0");
  }
}

Propagator::Propagator(const Kernel& kernel, const Grid& grid) : factors_(kernel, grid) {}

void Propagator::advance(DensityField& n) const {
  const Grid& g = factors_.grid();
  const long k = g.step_index(n.time);
  const auto view = factors_.at(k, survival_buf_, division_buf_);
  double* v = n.values.data();
  const std::size_t J = n.values.size();

  double births = 0.0;
  for (std::size_t j = 0; j < J; ++j) births += v[j] * view.division[j];
  n.lost_mass += v[J - 1] * view.survival[J - 1] * g.dx();
  for (std::size_t j = J - 1; j > 0; --j) v[j] = v[j - 1] * view.survival[j - 1];
  v[0] = 2.0 * births;
  n.time = g.time(k + 1);
}

void Propagator::advance_period(DensityField& n) const {
  for (long s = 0; s < grid().steps_per_period(); ++s) advance(n);
}

DensityField step(const DensityField& n, const Kernel& k, const Grid& grid, double t) {
  validate_density(n, grid);
  DensityField out = n;
  out.time = grid.time(grid.step_index(t));
  Propagator(k, grid).advance(out);
  return out;
}

DensityField monodromy(const DensityField& n0, const Kernel& k, const Grid& grid) {
  validate_density(n0, grid);
  DensityField out = n0;
  out.time = grid.time(grid.step_index(n0.time));
  Propagator(k, grid).advance_period(out);
  return out;
}

}  // namespace fgrowth
