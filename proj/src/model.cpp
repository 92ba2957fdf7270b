#include "fgrowth/model.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "fgrowth/errors.hpp"

namespace fgrowth {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

bool finite_nonneg(double v) { return std::isfinite(v) && v >= 0.0; }

// Period index and phase of t, with phases within tolerance of T wrapped to 0.
struct PhaseSplit {
  double index;
  double phase;
};

PhaseSplit split_phase(double t, double period) {
  double m = std::floor(t / period);
  double p = t - m * period;
  if (p >= period * (1.0 - kEdgeTolerance)) {
    m += 1.0;
    p = 0.0;
  } else if (p < 0.0) {
    p = 0.0;
  }
  return {m, p};
}

}  // namespace

void TwoPhaseRates::validate() const {
  if (!(alpha > 0.0 && alpha < 1.0)) throw ModelError("alpha must lie in (0,1)");
  for (double r : {a1, a2, b1, b2}) {
    if (!finite_nonneg(r)) throw ModelError("two-phase rates must be finite and >= 0");
  }
}

// ---------------------------------------------------------------- TimeModulation

TimeModulation::TimeModulation(Shape shape, double period)
    : shape_(shape), period_(period) {
  if (!(std::isfinite(period) && period > 0.0)) throw ModelError("period must be > 0");
}

TimeModulation TimeModulation::constant(double level, double period) {
  if (!finite_nonneg(level)) throw ModelError("constant level must be finite and >= 0");
  return TimeModulation(Constant{level}, period);
}

TimeModulation TimeModulation::square_wave(double tau, double period) {
  if (!(tau > 0.0 && tau < period)) throw ModelError("square wave needs 0 < tau < period");
  return TimeModulation(SquareWave{tau}, period);
}

TimeModulation TimeModulation::shifted_square_wave(double tau, double period, double epsilon) {
  if (!(tau > 0.0 && tau < period)) throw ModelError("square wave needs 0 < tau < period");
  if (!finite_nonneg(epsilon)) throw ModelError("epsilon must be finite and >= 0");
  return TimeModulation(ShiftedSquareWave{tau, epsilon}, period);
}

std::optional<double> TimeModulation::tau() const {
  if (auto* s = std::get_if<SquareWave>(&shape_)) return s->tau;
  if (auto* s = std::get_if<ShiftedSquareWave>(&shape_)) return s->tau;
  return std::nullopt;
}

double TimeModulation::epsilon() const {
  if (auto* s = std::get_if<ShiftedSquareWave>(&shape_)) return s->epsilon;
  return 0.0;
}

double TimeModulation::max_value() const {
  if (auto* c = std::get_if<Constant>(&shape_)) return c->level;
  return 1.0 + epsilon();
}

double TimeModulation::min_value() const {
  if (auto* c = std::get_if<Constant>(&shape_)) return c->level;
  return epsilon();
}

double TimeModulation::phase(double t) const { return split_phase(t, period_).phase; }

double TimeModulation::operator()(double t) const {
  if (auto* c = std::get_if<Constant>(&shape_)) return c->level;
  const double tau = *this->tau();
  const double p = phase(t);
  const double window = p < tau - kEdgeTolerance * period_ ? 1.0 : 0.0;
  return window + epsilon();
}

double TimeModulation::integral(double t0, double t1) const {
  if (t1 <= t0) return 0.0;
  if (auto* c = std::get_if<Constant>(&shape_)) return c->level * (t1 - t0);
  const double tau = *this->tau();
  auto cumulative = [&](double t) {
    const PhaseSplit s = split_phase(t, period_);
    double p = s.phase;
    if (std::abs(p - tau) <= kEdgeTolerance * period_) p = tau;
    return s.index * tau + std::min(p, tau);
  };
  return cumulative(t1) - cumulative(t0) + epsilon() * (t1 - t0);
}

double TimeModulation::next_break(double t) const {
  if (is_constant()) return kInf;
  const double tau = *this->tau();
  const PhaseSplit s = split_phase(t, period_);
  if (s.phase < tau - kEdgeTolerance * period_) return s.index * period_ + tau;
  return (s.index + 1.0) * period_;
}

TimeModulation TimeModulation::with_tau(double tau) const {
  if (std::holds_alternative<SquareWave>(shape_)) return square_wave(tau, period_);
  if (std::holds_alternative<ShiftedSquareWave>(shape_))
    return shifted_square_wave(tau, period_, epsilon());
  return *this;
}

TimeModulation TimeModulation::with_period(double period) const {
  return TimeModulation(shape_, period);
}

// ----------------------------------------------------------------- AgeModulation

AgeModulation AgeModulation::one() { return AgeModulation(); }

AgeModulation AgeModulation::tabulated(std::vector<double> samples, double spacing,
                                       bool nondecreasing) {
  if (samples.empty()) throw ModelError("tabulated B needs at least one sample");
  if (!(std::isfinite(spacing) && spacing > 0.0)) throw ModelError("B spacing must be > 0");
  for (double s : samples) {
    if (!(std::isfinite(s) && s > 0.0)) throw ModelError("B samples must be finite and > 0");
  }
  const bool sorted = std::is_sorted(samples.begin(), samples.end());
  if (nondecreasing && !sorted) throw ModelError("B samples flagged nondecreasing but decrease");
  AgeModulation b;
  b.samples_ = std::move(samples);
  b.spacing_ = spacing;
  b.nondecreasing_ = sorted;
  return b;
}

double AgeModulation::operator()(double x) const {
  if (samples_.empty()) return 1.0;
  const double idx = std::floor(x / spacing_ + kEdgeTolerance);
  const auto last = static_cast<double>(samples_.size() - 1);
  return samples_[static_cast<std::size_t>(std::clamp(idx, 0.0, last))];
}

double AgeModulation::next_break(double x) const {
  if (samples_.empty()) return kInf;
  const double idx = std::max(0.0, std::floor(x / spacing_ + kEdgeTolerance));
  if (idx >= static_cast<double>(samples_.size() - 1)) return kInf;
  return (idx + 1.0) * spacing_;
}

double AgeModulation::max_value() const {
  if (samples_.empty()) return 1.0;
  return *std::max_element(samples_.begin(), samples_.end());
}

// ---------------------------------------------------------------- DivisionKernel

DivisionKernel::DivisionKernel(double kappa, TimeModulation psi, AgeModulation B, double a)
    : kappa_(kappa), psi_(std::move(psi)), B_(std::move(B)), a_(a) {
  if (!finite_nonneg(kappa)) throw ModelError("kappa must be finite and >= 0");
  if (!finite_nonneg(a)) throw ModelError("majority age must be finite and >= 0");
}

double DivisionKernel::rate(double t, double x) const {
  if (x + kEdgeTolerance * std::max(1.0, a_) < a_) return 0.0;
  return kappa_ * psi_(t) * B_(x);
}

double DivisionKernel::characteristic_integral(double t0, double age0, double duration) const {
  if (duration <= 0.0 || kappa_ == 0.0) return 0.0;
  double y = a_ - age0;
  if (y < kEdgeTolerance * std::max(1.0, a_)) y = 0.0;
  if (y >= duration) return 0.0;
  if (B_.is_one()) return kappa_ * psi_.integral(t0 + y, t0 + duration);

  double total = 0.0;
  while (y < duration) {
    const double x = age0 + y;
    const double y_next = std::min(duration, B_.next_break(x) - age0);
    const double mid = age0 + 0.5 * (y + y_next);
    total += B_(mid) * psi_.integral(t0 + y, t0 + y_next);
    y = y_next;
  }
  return kappa_ * total;
}

DivisionKernel DivisionKernel::with_kappa(double kappa) const {
  return DivisionKernel(kappa, psi_, B_, a_);
}

DivisionKernel DivisionKernel::with_psi(TimeModulation psi) const {
  return DivisionKernel(kappa_, std::move(psi), B_, a_);
}

DivisionKernel DivisionKernel::with_a(double a) const { return DivisionKernel(kappa_, psi_, B_, a); }

// -------------------------------------------------------------- BirthPhaseKernel

BirthPhaseKernel::BirthPhaseKernel(TwoPhaseRates rates)
    : rates_(rates), day_(TimeModulation::square_wave(rates.alpha, 1.0)) {
  rates_.validate();
}

bool BirthPhaseKernel::is_day(double t) const { return day_(t) > 0.5; }

double BirthPhaseKernel::rate(double t, double x) const {
  const bool born_by_day = is_day(t - x);
  const bool day = is_day(t);
  if (born_by_day) return day ? rates_.a1 : rates_.b1;
  return day ? rates_.a2 : rates_.b2;
}

double BirthPhaseKernel::characteristic_integral(double t0, double age0, double duration) const {
  if (duration <= 0.0) return 0.0;
  const double day = day_.integral(t0, t0 + duration);
  const double night = duration - day;
  if (is_day(t0 - age0)) return rates_.a1 * day + rates_.b1 * night;
  return rates_.a2 * day + rates_.b2 * night;
}

// ------------------------------------------------------------------ free functions

double eval_kernel(const Kernel& k, double t, double x) {
  return std::visit([&](const auto& kk) { return kk.rate(t, x); }, k);
}

double characteristic_integral(const Kernel& k, double t0, double age0, double duration) {
  return std::visit(
      [&](const auto& kk) { return kk.characteristic_integral(t0, age0, duration); }, k);
}

double kernel_period(const Kernel& k) {
  return std::visit([](const auto& kk) { return kk.period(); }, k);
}

double majority_age(const Kernel& k) {
  if (auto* d = std::get_if<DivisionKernel>(&k)) return d->a();
  return 0.0;
}

double survival_integral(const Kernel& k, double v, double t) {
  if (v < 0.0 || v > t + kEdgeTolerance * std::max(1.0, std::abs(t))) {
    throw ModelError("survival_integral needs 0 <= v <= t");
  }
  return characteristic_integral(k, v, 0.0, t - v);
}

// -------------------------------------------------------------------------- Grid

Grid::Grid(double dx, double x_max, long steps_per_period)
    : dx_(dx), x_max_(x_max), nodes_(0), steps_per_period_(steps_per_period) {
  if (!(std::isfinite(dx) && dx > 0.0)) throw ModelError("dx must be > 0");
  if (steps_per_period < 1) throw ModelError("steps_per_period must be >= 1");
  if (!(std::isfinite(x_max) && x_max > 0.0)) throw ModelError("x_max must be > 0");
  const double ratio = x_max / dx;
  const double rounded = std::round(ratio);
  if (rounded < 1.0 || std::abs(ratio - rounded) > 1e-9 * std::max(1.0, ratio)) {
    throw ModelError("x_max must be an integer multiple of dx");
  }
  nodes_ = static_cast<long>(rounded);
  x_max_ = dx_ * rounded;
}

Grid Grid::for_kernel(const Kernel& k, long steps_per_period, std::optional<double> x_max) {
  if (steps_per_period < 1) throw ModelError("steps_per_period must be >= 1");
  const double period = kernel_period(k);
  const double dx = period / static_cast<double>(steps_per_period);
  double nodes = 0.0;
  if (x_max) {
    nodes = std::ceil(*x_max / dx - 1e-9);
  } else {
    nodes = std::round(majority_age(k) / dx) + 3.0 * static_cast<double>(steps_per_period);
  }
  return Grid(dx, dx * nodes, steps_per_period);
}

long Grid::step_index(double t) const {
  const double r = t / dx_;
  const double k = std::round(r);
  if (k < 0.0 || std::abs(r - k) > 1e-7 * std::max(1.0, std::abs(r))) {
    throw ModelError("time " + std::to_string(t) + " is not a grid time");
  }
  return static_cast<long>(k);
}

long Grid::nearest_node(double x) const {
  return std::clamp(static_cast<long>(std::llround(x / dx_)), 0L, nodes_);
}

// ------------------------------------------------------------------ DensityField

double DensityField::mass() const {
  double s = 0.0;
  for (double v : values) s += v;
  return dx * s;
}

DensityField DensityField::zeros(const Grid& grid, double time) {
  DensityField f;
  f.values.assign(static_cast<std::size_t>(grid.nodes()), 0.0);
  f.time = time;
  f.dx = grid.dx();
  return f;
}

DensityField DensityField::indicator(const Grid& grid, double x_lo, double x_hi) {
  DensityField f = zeros(grid);
  const double tol = 1e-9 * grid.dx();
  for (long j = 0; j < grid.nodes(); ++j) {
    const double x = grid.age(j);
    if (x >= x_lo - tol && x < x_hi - tol) f.values[static_cast<std::size_t>(j)] = 1.0;
  }
  return f;
}

// ------------------------------------------------------------------ alignment

GridAlignment align_to_grid(const Kernel& k, const Grid& grid) {
  const double T = grid.period();
  const double dt = grid.dt();
  auto snap_edge = [&](double edge) {
    if (grid.steps_per_period() < 2) throw ModelError("a window edge needs >= 2 steps per period");
    const double lo = dt;
    const double hi = T - dt;
    return std::clamp(std::round(edge / dt) * dt, lo, hi);
  };

  if (auto* d = std::get_if<DivisionKernel>(&k)) {
    const TimeModulation& psi = d->psi();
    if (!psi.is_constant() && std::abs(psi.period() - T) > 1e-9 * T) {
      throw ModelError("kernel period does not match the grid period");
    }
    const double a_snapped = std::round(d->a() / grid.dx()) * grid.dx();
    GridAlignment out{*d, a_snapped - d->a(), 0.0};
    TimeModulation snapped = psi.with_period(T);
    if (auto tau = psi.tau()) {
      const double tau_snapped = snap_edge(*tau);
      out.time_shift = tau_snapped - *tau;
      snapped = snapped.with_tau(tau_snapped);
    }
    out.kernel = DivisionKernel(d->kappa(), snapped, d->B(), a_snapped);
    return out;
  }

  const auto& b = std::get<BirthPhaseKernel>(k);
  if (std::abs(T - 1.0) > 1e-9) throw ModelError("the birth-phase kernel has period 1");
  TwoPhaseRates r = b.rates();
  const double alpha = snap_edge(r.alpha);
  GridAlignment out{b, 0.0, alpha - r.alpha};
  r.alpha = alpha;
  out.kernel = BirthPhaseKernel(r);
  return out;
}

// ------------------------------------------------------- monotonicity condition

MonotonicityReport check_monotonicity_condition(const Kernel& k, const Grid& grid,
                                                double horizon) {
  MonotonicityReport report;
  const long steps = static_cast<long>(std::floor(horizon / grid.dt() + 1e-9));
  for (long kt = 1; kt <= steps; ++kt) {
    const double t = grid.time(kt);
    double prev = survival_integral(k, 0.0, t);
    for (long m = 1; m <= kt; ++m) {
      const double v = grid.time(m);
      const double cur = survival_integral(k, std::min(v, t), t);
      const double increase = cur - prev;
      if (increase > 1e-12 * std::max(1.0, std::abs(prev))) {
        if (report.holds) report.witness = std::array<double, 3>{grid.time(m - 1), v, t};
        report.holds = false;
        report.worst_increase = std::max(report.worst_increase, increase);
      }
      prev = cur;
    }
  }
  return report;
}

}  // namespace fgrowth
