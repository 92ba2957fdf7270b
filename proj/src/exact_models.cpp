#include "fgrowth/exact_models.hpp"

#include <cmath>
#include <limits>
#include <numbers>

#include "fgrowth/bisection.hpp"
#include "fgrowth/errors.hpp"

namespace fgrowth {

Matrix2 day_generator(const TwoPhaseRates& r) { return {r.a1, 2.0 * r.a2, 0.0, -r.a2}; }

Matrix2 night_generator(const TwoPhaseRates& r) { return {-r.b1, 0.0, 2.0 * r.b1, r.b2}; }

Matrix2 two_phase_monodromy(const TwoPhaseRates& r) {
  r.validate();
  return expm2(night_generator(r), 1.0 - r.alpha) * expm2(day_generator(r), r.alpha);
}

double counterexample_lambda(const TwoPhaseRates& r) {
  return std::log(spectral_radius(two_phase_monodromy(r)));
}

RateSurface counterexample_surface(double a1, double a2, std::pair<double, double> b1_range,
                                   std::pair<double, double> b2_range, long resolution,
                                   double alpha) {
  if (resolution < 2) throw ModelError("surface resolution must be >= 2");
  auto axis = [&](std::pair<double, double> range) {
    std::vector<double> v(static_cast<std::size_t>(resolution));
    for (long i = 0; i < resolution; ++i) {
      v[static_cast<std::size_t>(i)] =
          range.first + (range.second - range.first) * static_cast<double>(i) /
                            static_cast<double>(resolution - 1);
    }
    return v;
  };
  RateSurface s;
  s.b1 = axis(b1_range);
  s.b2 = axis(b2_range);
  s.lambda.assign(s.b1.size(), std::vector<double>(s.b2.size()));
  for (std::size_t i = 0; i < s.b1.size(); ++i) {
    for (std::size_t j = 0; j < s.b2.size(); ++j) {
      s.lambda[i][j] = counterexample_lambda(TwoPhaseRates{alpha, a1, a2, s.b1[i], s.b2[j]});
    }
  }
  return s;
}

AggregatedTrajectory aggregated_ode_simulate(const TwoPhaseRates& r, long periods,
                                             std::array<double, 2> P0) {
  r.validate();
  if (periods < 1) throw ModelError("periods must be >= 1");
  if (!(P0[0] >= 0.0 && P0[1] >= 0.0 && P0[0] + P0[1] > 0.0)) {
    throw ModelError("initial state must be nonnegative and nonzero");
  }
  const Matrix2 day = expm2(day_generator(r), r.alpha);
  const Matrix2 night = expm2(night_generator(r), 1.0 - r.alpha);

  AggregatedTrajectory out;
  std::array<double, 2> P = P0;
  double log_scale = 0.0;
  auto record = [&](double t) {
    const double m = P[0] + P[1];
    log_scale += std::log(m);
    P = {P[0] / m, P[1] / m};
    out.times.push_back(t);
    out.direction.push_back(P);
    out.log_mass.push_back(log_scale);
  };
  record(0.0);
  for (long p = 0; p < periods; ++p) {
    P = day * P;
    record(static_cast<double>(p) + r.alpha);
    P = night * P;
    record(static_cast<double>(p + 1));
  }
  const std::size_t n = out.log_mass.size();
  out.growth_rate = out.log_mass[n - 1] - out.log_mass[n - 3];
  return out;
}

double constant_psi_lambda(double kappa_alpha, const AgeModulation& B, double a) {
  if (!(kappa_alpha > 0.0) || !std::isfinite(kappa_alpha)) {
    throw ModelError("kappa * level must be finite and > 0");
  }
  if (!(a >= 0.0)) throw ModelError("majority age must be >= 0");
  const double k = kappa_alpha;

  auto F = [&](double mu) {
    if (B.is_one()) return 2.0 * k * std::exp(-mu * a) / (mu + k) - 1.0;
    double total = 0.0;
    double x = a;
    double hazard = 0.0;  // k int_a^x B
    while (true) {
      const double b = B(x);
      const double next = B.next_break(x);
      const double rate = mu + k * b;
      const double head = k * b * std::exp(-mu * x - hazard);
      if (!std::isfinite(next)) {
        total += head / rate;
        break;
      }
      const double len = next - x;
      total += head * -std::expm1(-rate * len) / rate;
      hazard += k * b * len;
      x = next;
    }
    return 2.0 * total - 1.0;
  };

  const double hi = a > 0.0 ? std::numbers::ln2 / a : 2.0 * k * B.max_value();
  return bisect(F, 0.0, hi, 1e-13);
}

namespace {

struct RenewalMatrix {
  long n;
  std::vector<double> entries;  // row-major n x n
};

RenewalMatrix build_renewal(const DivisionKernel& k, double lambda, long n, const RenewalCutoff& cut) {
  const double T = k.period();
  const double h = T / static_cast<double>(n);
  const double a = k.a();
  const Kernel kernel = k;
  RenewalMatrix A{n, std::vector<double>(static_cast<std::size_t>(n * n), 0.0)};

  const long min_cells = cut.min_periods * n + static_cast<long>(std::ceil(a / h));
  const long max_cells = std::max(min_cells, 20'000'000L / n);
  for (long m = 1; m <= max_cells; ++m) {
    const double lo = std::max(static_cast<double>(m - 1) * h, a);
    const double hi = static_cast<double>(m) * h;
    if (hi <= lo) continue;
    const double x = 0.5 * (lo + hi);
    const double w = hi - lo;
    double largest = 0.0;
    for (long i = 0; i < n; ++i) {
      const double birth = static_cast<double>(i) * h - x;
      // mass absorbed over the cell along the characteristic through its midpoint
      const double survive = characteristic_integral(kernel, birth, 0.0, lo);
      const double decay = std::exp(-lambda * x - survive);
      largest = std::max(largest, decay);
      if (decay == 0.0) continue;
      const double absorbed = -std::expm1(-characteristic_integral(kernel, birth + lo, lo, w));
      if (absorbed == 0.0) continue;
      long col = static_cast<long>(std::floor(birth / h + 1e-9)) % n;
      if (col < 0) col += n;
      A.entries[static_cast<std::size_t>(i * n + col)] += 2.0 * absorbed * decay;
    }
    if (m >= min_cells && largest < cut.weight) break;
  }
  return A;
}

// Perron root of A through power iteration on A + I, warm-started from v.
double perron_root(const RenewalMatrix& A, std::vector<double>& v) {
  const auto n = static_cast<std::size_t>(A.n);
  if (v.size() != n) v.assign(n, 1.0 / static_cast<double>(n));
  std::vector<double> w(n);
  double estimate = 0.0;
  // summation roundoff grows with n
  const double noise = std::max(1e-14, 8.0 * std::numeric_limits<double>::epsilon() * static_cast<double>(n));
  for (long it = 1; it <= 200000; ++it) {
    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double* row = &A.entries[i * n];
      double s = v[i];
      for (std::size_t j = 0; j < n; ++j) s += row[j] * v[j];
      w[i] = s;
      total += s;
    }
    double change = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      w[i] /= total;
      change += std::abs(w[i] - v[i]);
    }
    v.swap(w);
    const double next = total - 1.0;  // v has unit sum
    const bool settled = std::abs(next - estimate) <= noise * std::max(1.0, next);
    estimate = next;
    if (settled && change < 1e-12) return estimate;
  }
  throw NonConverged("renewal power iteration did not converge", 200000, 0.0, estimate);
}

}  // namespace

double renewal_rho(const DivisionKernel& k, double lambda, long time_nodes, const RenewalCutoff& cut) {
  if (!(lambda > 0.0)) throw ModelError("lambda must be > 0");
  if (time_nodes < 16) throw ModelError("time_nodes must be >= 16");
  if (!(cut.weight > 0.0) || cut.min_periods < 1) throw ModelError("invalid renewal cutoff");
  std::vector<double> v;
  return perron_root(build_renewal(k, lambda, time_nodes, cut), v);
}

double renewal_lambda(const DivisionKernel& k, long time_nodes, double tol) {
  if (!(tol > 0.0)) throw ModelError("tolerance must be > 0");
  if (time_nodes < 16) throw ModelError("time_nodes must be >= 16");
  if (!(k.a() > 0.0)) throw ModelError("renewal route needs a > 0");
  std::vector<double> v;
  auto f = [&](double lambda) {
    return perron_root(build_renewal(k, lambda, time_nodes, RenewalCutoff{}), v) - 1.0;
  };
  return bisect(f, 1e-8, std::numbers::ln2 / k.a(), tol);
}

}  // namespace fgrowth
