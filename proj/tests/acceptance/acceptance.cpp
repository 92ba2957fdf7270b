// Acceptance gate: one PASS/FAIL line per criterion, nonzero exit on any FAIL.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <numbers>
#include <sstream>
#include <string>
#include <vector>

#include "fgrowth/errors.hpp"
#include "fgrowth/exact_models.hpp"
#include "fgrowth/experiments.hpp"
#include "fgrowth/floquet.hpp"
#include "fgrowth/generations.hpp"
#include "fgrowth/scheme.hpp"
#include "fgrowth/staircase.hpp"

using namespace fgrowth;

namespace {

constexpr double kLog2 = std::numbers::ln2;
using R = Rational;

struct Outcome {
  bool pass = true;
  std::ostringstream detail;

  void require(bool ok, const std::string& what) {
    if (!ok) {
      pass = false;
      detail << "[failed: " << what << "] ";
    }
  }
};

DivisionKernel square(double kappa, double tau, double a, double T = 1.0) {
  return DivisionKernel(kappa, TimeModulation::square_wave(tau, T), AgeModulation::one(), a);
}

DivisionKernel flat(double kappa, double a) {
  return DivisionKernel(kappa, TimeModulation::constant(1.0), AgeModulation::one(), a);
}

double solve(const Kernel& k, const Grid& g) {
  FloquetOptions opts;
  opts.keep_profile = false;
  opts.tol = 1e-11;
  opts.max_iter = 100000;
  return floquet_eigen(align_to_grid(k, g).kernel, g, opts).lambda;
}

// --- 1: constant rate against the implicit equation -------------------------
void ac1(Outcome& o) {
  const double mu = constant_psi_lambda(1.0, AgeModulation::one(), 1.0);
  o.require(std::abs(2.0 * std::exp(-mu) - mu - 1.0) < 1e-12, "implicit equation residual");
  const double e1 = std::abs(solve(flat(1.0, 1.0), Grid(1e-3, 30.0, 1000)) - mu);
  const double e2 = std::abs(solve(flat(1.0, 1.0), Grid(5e-4, 30.0, 2000)) - mu);
  o.detail << "mu=" << format_number(mu) << " err(1e-3)=" << format_number(e1)
           << " err(5e-4)=" << format_number(e2) << " ratio=" << format_number(e1 / e2) << ' ';
  o.require(e1 <= 5e-3, "error at dx=1e-3 within 5e-3");
  // at least first order: halving dx at least (nearly) halves the error
  o.require(e1 / e2 >= 1.8, "error ratio under halving dx");
}

// --- 2: convergence to log 2 / a ----------------------------------------------
void ac2(Outcome& o) {
  const double dx = 2e-3;
  double prev = -INFINITY;
  for (double kappa : {1.0, 5.0, 20.0, 50.0}) {
    const double x_max = 1.0 + std::ceil(40.0 / kappa / dx) * dx;
    const double l = solve(flat(kappa, 1.0), Grid(dx, x_max, 500));
    o.detail << "k" << kappa << "=" << format_number(l) << ' ';
    o.require(l >= prev, "nondecreasing in kappa");
    o.require(l <= kLog2 + 2.0 * dx, "below log 2 + 2 dx");
    prev = l;
  }
  o.require(prev >= 0.95 * kLog2, "kappa=50 reaches 0.95 log 2");
}

// --- 3: one staircase value ----------------------------------------------------
void ac3(Outcome& o) {
  const auto s = staircase<R>(R(11, 50), R(3, 5), R(1));
  o.detail << "N_a=" << s.N_a << " p_a=" << s.p_a << " lambda=" << format_number(s.lambda_inf)
           << " a_r=" << to_string(s.a_r) << ' ';
  o.require(s.N_a == 3 && s.p_a == 0, "N_a = 3, p_a = 0");
  o.require(s.lambda_inf == 3.0 * kLog2, "lambda_inf = 3 log 2");
  o.require(lambda_infinity<R>(R(11, 50), R(3, 5), R(1)) == 3.0 * kLog2, "lambda_infinity");
  o.require(step_interval<R>(R(11, 50), R(3, 5), R(1)).second == R(3, 10), "rational a_r = 3/10");
  const double ar = step_interval<double>(0.22, 0.6, 1.0).second;
  o.require(std::abs(ar - 0.3) <= 1e-9, "floating a_r within 1e-9");
}

// --- 4: two-sided estimate at kappa = 50 ---------------------------------------
void ac4(Outcome& o) {
  const double dx = 1e-3;
  const auto s = staircase<double>(0.22, 0.6, 1.0);
  const double l = solve(square(50.0, 0.6, 0.22), Grid(dx, 3.22, 1000));
  const double lo = s.lambda_inf * (1.0 - std::exp(-50.0 * s.rate_bound));
  const double hi = s.lambda_inf + 10.0 * dx;
  o.detail << "lambda=" << format_number(l) << " in [" << format_number(lo) << ", "
           << format_number(hi) << "] ";
  o.require(lo <= l && l <= hi, "sandwich");
}

// --- 5: sweep shape and staircase properties ----------------------------------
void ac5(Outcome& o) {
  const long steps = 600;
  const double dx = 1.0 / static_cast<double>(steps);
  FloquetOptions opts;
  opts.keep_profile = false;
  opts.tol = 1e-10;
  opts.max_iter = 100000;
  for (const auto& [tau_d, tau_r] : {std::pair{0.5, R(1, 2)}, std::pair{1.0 / 3.0, R(1, 3)}}) {
    std::vector<SweepPoint> pts;
    for (double a : range_values(0.005, 1.2, 0.005)) pts.push_back({a + 1e-6, 100.0, 0.0});
    const auto rows = floquet_sweep(square(100.0, tau_d, 0.5), steps, pts, opts, worker_count());
    long checked = 0;
    double worst_over = -INFINITY;
    double worst_rel = 0.0;
    for (const auto& row : rows) {
      if (row.status != "ok") {
        o.require(false, "sweep point " + format_number(row.point.a) + " " + row.status);
        continue;
      }
      const R a_r(std::lround(row.point.a * static_cast<double>(steps)), steps);
      const auto s = staircase<R>(a_r, tau_r, R(1));
      worst_over = std::max(worst_over, row.lambda - s.lambda_inf);
      if (row.lambda > s.lambda_inf + 10.0 * dx) {
        o.require(false, "above lambda_inf + 10 dx at a=" + format_number(row.point.a));
      }
      if (s.rate_bound >= 0.05) {
        ++checked;
        const double rel = std::abs(row.lambda - s.lambda_inf) / s.lambda_inf;
        worst_rel = std::max(worst_rel, rel);
        if (rel > 0.05) o.require(false, "off by more than 5% at a=" + format_number(row.point.a));
      }
    }
    o.detail << "tau=" << format_number(tau_d) << ": max(lambda - lambda_inf)="
             << format_number(worst_over) << " worst rel=" << format_number(worst_rel) << " over "
             << checked << " pts; ";

    // the limit itself on a fine rational scan
    double prev = INFINITY;
    for (long i = 1; i <= 1200; ++i) {
      const R a(i, 1000);
      const auto s = staircase<R>(a, tau_r, R(1));
      const long q = static_cast<long>(std::ceil(to_double(a * R(s.N_a)) - 1e-12));
      const R Na_a = a * R(s.N_a);
      const long q_exact = Na_a.numerator() / Na_a.denominator() + (Na_a.numerator() % Na_a.denominator() != 0);
      if (q != q_exact || s.p_a + 1 != q_exact) o.require(false, "p_a + 1 = ceil(N_a a)");
      if (s.lambda_inf != static_cast<double>(s.N_a) * kLog2 / static_cast<double>(s.p_a + 1)) {
        o.require(false, "value N log 2 / p");
      }
      if (s.lambda_inf > prev) o.require(false, "nonincreasing at a=" + to_string(a));
      prev = s.lambda_inf;
      if (!(s.a_l <= a && a <= s.a_r)) o.require(false, "step contains a");
      const double mid = lambda_infinity<R>((s.a_l + std::min(s.a_r, a + R(1, 2000))) / R(2), tau_r, R(1));
      if (a > s.a_l && mid != s.lambda_inf) o.require(false, "constant on the step");
      double gap_prev = INFINITY;
      for (long e : {1000L, 1000000L, 1000000000L}) {
        const double gap = std::abs(lambda_infinity<R>(a + R(1, e), tau_r, R(1)) - s.lambda_inf);
        if (gap > gap_prev) o.require(false, "right limit at a=" + to_string(a));
        gap_prev = gap;
      }
      if (gap_prev > 1e-6) o.require(false, "right continuity at a=" + to_string(a));
    }
  }
}

// --- 6: two-phase counter-example ---------------------------------------------
void ac6(Outcome& o) {
  TwoPhaseRates r;
  r.alpha = 0.5;
  r.a1 = 10.0;
  r.a2 = 0.0;
  r.b2 = 0.0;
  double worst = 0.0;
  for (int b1 = 0; b1 <= 12; ++b1) {
    r.b1 = b1;
    worst = std::max(worst, std::abs(counterexample_lambda(r) - std::max(5.0 - 0.5 * b1, 0.0)));
  }
  o.require(worst <= 1e-12, "triangular closed form");
  r.a2 = 0.1;
  r.b2 = 0.01;
  r.b1 = 0.0;
  const double l0 = counterexample_lambda(r);
  r.b1 = 5.0;
  const double l5 = counterexample_lambda(r);
  o.detail << "closed-form err=" << format_number(worst) << " lambda(b1=0)=" << format_number(l0)
           << " lambda(b1=5)=" << format_number(l5) << ' ';
  o.require(l5 < l0, "larger b1 gives smaller growth");
}

// --- 7: generational identity -------------------------------------------------
void ac7(Outcome& o) {
  const double dx = 2e-3;
  const Grid g(dx, 3.22, 500);
  const Kernel k = align_to_grid(square(10.0, 0.6, 0.22), g).kernel;
  const DensityField n0 = DensityField::indicator(g, 0.0, 1.0);
  DensityField direct = n0;
  const Propagator prop(k, g);
  double worst = 0.0;
  GenerationOptions opts;
  opts.observer = [&](long s, const std::vector<DensityField>& gens) {
    if (s > 0) prop.advance(direct);
    const DensityField sum = reaggregate(gens);
    double d = 0.0;
    for (std::size_t j = 0; j < sum.values.size(); ++j) d += std::abs(sum.values[j] - direct.values[j]);
    d = d * dx + std::abs(sum.lost_mass - direct.lost_mass);
    worst = std::max(worst, d / (direct.mass() + direct.lost_mass));
  };
  const auto st = solve_generations(n0, k, g, 2.0, opts);
  double s0 = 0.0;
  double s1 = 0.0;
  for (long s = 0; s <= st.steps; ++s) {
    const double t = g.time(s);
    s0 = std::max(s0, std::abs(S_tail(st, 0, t) - n0.mass()) / n0.mass());
    s1 = std::max(s1, std::abs(S_tail(st, 1, t) - S_closed_form(st, n0, k, 1, t)));
  }
  o.detail << "L1 rel=" << format_number(worst) << " S0 drift=" << format_number(s0)
           << " S1 gap=" << format_number(s1) << ' ';
  o.require(!st.truncated, "no generation truncated");
  o.require(worst <= 1e-9, "reaggregation");
  o.require(s0 <= 1e-12, "S0 conserved");
  o.require(s1 <= 5.0 * dx, "S1 closed form");
}

// --- 8: comparison principle --------------------------------------------------
void ac8(Outcome& o) {
  const double dx = 2e-3;
  const Grid g(dx, 3.22, 500);
  const Kernel k1 = align_to_grid(square(5.0, 0.6, 0.22), g).kernel;
  const Kernel k2 = align_to_grid(square(10.0, 0.6, 0.22), g).kernel;
  const DensityField n0 = DensityField::indicator(g, 0.0, 1.0);
  DensityField m1 = n0;
  DensityField m2 = n0;
  const Propagator p1(k1, g);
  const Propagator p2(k2, g);
  double worst = INFINITY;
  for (long s = 0; s <= 3 * g.steps_per_period(); ++s) {
    if (s > 0) {
      p1.advance(m1);
      p2.advance(m2);
    }
    worst = std::min(worst, (m2.mass() + m2.lost_mass) - (m1.mass() + m1.lost_mass));
  }
  o.require(worst >= -1e-9, "total mass ordering");
  const auto rep = stochastic_order_check(k1, k2, n0, g, 3.0);
  o.detail << "min mass gap=" << format_number(worst) << " S_j ordering up to j=" << rep.i_max
           << ' ';
  o.require(rep.i_max >= 10, "generations up to 10 compared");
  o.require(rep.holds, "S_j ordering");
}

// --- 9: renewal operator against the PDE --------------------------------------
void ac9(Outcome& o) {
  const double dx = 2e-3;
  const std::vector<DivisionKernel> models = {flat(1.0, 1.0), flat(4.0, 0.5),
                                              square(50.0, 0.6, 0.22), square(10.0, 0.5, 0.3),
                                              square(20.0, 1.0 / 3.0, 0.45)};
  for (const auto& m : models) {
    const double x_max = m.psi().is_constant() ? m.a() + 20.0 : m.a() + 3.0;
    const Grid g(dx, std::ceil(x_max / dx - 1e-9) * dx, 500);
    const auto aligned = std::get<DivisionKernel>(align_to_grid(m, g).kernel);
    const double lf = solve(aligned, g);
    const double lr = renewal_lambda(aligned, 400);
    o.detail << format_number(lf) << "/" << format_number(lr) << ' ';
    o.require(std::abs(lf - lr) <= 10.0 * dx, "renewal vs floquet");

    double prev = INFINITY;
    for (double lambda : {0.01, 0.1, 0.5, 1.0, 2.0, 4.0}) {
      const double rho = renewal_rho(aligned, lambda, 64);
      if (rho >= prev) o.require(false, "rho decreasing");
      prev = rho;
    }
    if (std::abs(renewal_rho(aligned, 1e-8, 64) - 2.0) > 1e-3) o.require(false, "rho(0+) = 2");
  }
}

// --- 10: non-commuting limits -------------------------------------------------
void ac10(Outcome& o) {
  const double dx = 1e-3;
  const double delta = 0.01;
  FloquetOptions opts;
  opts.keep_profile = false;
  opts.tol = 1e-10;
  opts.max_iter = 100000;
  const auto p =
      noncommuting_limits_probe(0.22, 0.6, 1.0, {1e-4, 0.2}, {50.0, 200.0}, 1000, opts, worker_count());
  const double far = p.at(1, 1).lambda;
  const double near = p.at(0, 0).lambda;
  o.detail << "lambda(0.2,200)=" << format_number(far) << " lambda(1e-4,50)=" << format_number(near)
           << " gap=" << format_number(p.gap) << " reference=" << format_number(p.reference_gap)
           << ' ';
  for (const auto& r : p.rows) o.require(r.status == "ok", "probe cell converged");
  o.require(far > 0.9 * kLog2 / 0.22 * (1.0 - delta), "large epsilon trends to log 2 / a");
  o.require(near <= 3.0 * kLog2 + 10.0 * dx, "small epsilon stays on the staircase");
  o.require(p.gap > 0.0, "gap sign");
}

}  // namespace

int main() {
  const std::vector<std::pair<std::string, std::function<void(Outcome&)>>> criteria = {
      {"constant-rate cross-check", ac1},
      {"log 2 / a limit", ac2},
      {"staircase value", ac3},
      {"two-sided estimate", ac4},
      {"staircase sweep shape", ac5},
      {"two-phase counter-example", ac6},
      {"generational identity", ac7},
      {"comparison principle", ac8},
      {"renewal consistency", ac9},
      {"non-commuting limits", ac10}};
  int failures = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    Outcome o;
    const auto t0 = std::chrono::steady_clock::now();
    try {
      criteria[i].second(o);
    } catch (const std::exception& e) {
      o.pass = false;
      o.detail << "[exception: " << e.what() << "] ";
    }
    const double secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (!o.pass) ++failures;
    std::printf("AC%-2zu %s  %-28s %s(%.1f s)\n", i + 1, o.pass ? "PASS" : "FAIL",
                criteria[i].first.c_str(), o.detail.str().c_str(), secs);
    std::fflush(stdout);
  }
  std::printf("%d of %zu criteria failed\n", failures, criteria.size());
  return failures == 0 ? 0 : 1;
}
