#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>
#include <vector>

#include <Eigen/Dense>
#include <unsupported/Eigen/MatrixFunctions>

#include "fgrowth/errors.hpp"
#include "fgrowth/exact_models.hpp"

using namespace fgrowth;

namespace {

constexpr double kLog2 = std::numbers::ln2;

Eigen::Matrix2d to_eigen(const Matrix2& m) {
  Eigen::Matrix2d e;
  e << m.a, m.b, m.c, m.d;
  return e;
}

double rel_diff(const Matrix2& m, const Eigen::Matrix2d& ref) {
  const double scale = std::max(ref.cwiseAbs().maxCoeff(), 1e-300);
  return (to_eigen(m) - ref).cwiseAbs().maxCoeff() / scale;
}

TwoPhaseRates rates(double alpha, double a1, double a2, double b1, double b2) {
  TwoPhaseRates r;
  r.alpha = alpha;
  r.a1 = a1;
  r.a2 = a2;
  r.b1 = b1;
  r.b2 = b2;
  return r;
}

// Newton on 2 kappa exp(-mu a) = mu + kappa.
double newton_root(double kappa, double a) {
  double mu = 0.5 * kLog2 / a;
  for (int i = 0; i < 100; ++i) {
    const double f = 2.0 * kappa * std::exp(-mu * a) - mu - kappa;
    const double df = -2.0 * kappa * a * std::exp(-mu * a) - 1.0;
    mu -= f / df;
  }
  return mu;
}

}  // namespace

TEST_CASE("matrix exponential at the documented points") {
  const Matrix2 I = expm2(Matrix2{}, 3.0);
  CHECK(I.a == 1.0);
  CHECK(I.b == 0.0);
  CHECK(I.c == 0.0);
  CHECK(I.d == 1.0);
  const Matrix2 D = expm2(Matrix2::diag(0.3, -1.7), 1.0);
  CHECK(D.a == doctest::Approx(std::exp(0.3)).epsilon(1e-15));
  CHECK(D.d == doctest::Approx(std::exp(-1.7)).epsilon(1e-15));
  CHECK(std::abs(D.b) < 1e-300);
  const Matrix2 N = expm2(Matrix2{0.0, 1.0, 0.0, 0.0}, 1.0);
  CHECK(N.a == 1.0);
  CHECK(N.b == 1.0);
  CHECK(N.c == 0.0);
  CHECK(N.d == 1.0);
}

TEST_CASE("matrix exponential matches scaling and squaring") {
  std::mt19937_64 rng(12345);
  std::uniform_real_distribution<double> u(-4.0, 4.0);
  double worst = 0.0;
  for (int i = 0; i < 2000; ++i) {
    const Matrix2 m{u(rng), u(rng), u(rng), u(rng)};
    const double s = 0.5 + std::abs(u(rng)) / 4.0;
    const Eigen::Matrix2d ref = (s * to_eigen(m)).exp();
    worst = std::max(worst, rel_diff(expm2(m, s), ref));
  }
  CHECK(worst <= 1e-12);

  // defective, nearly defective and complex pairs
  const std::vector<Matrix2> special = {
      {2.0, 1.0, 0.0, 2.0},       {2.0, 1.0, 1e-14, 2.0}, {2.0, 1.0, -1e-14, 2.0},
      {1.0, 1e-7, 1e-7, 1.0},     {0.0, -3.0, 3.0, 0.0},  {-1.0, 5.0, -5.0, -1.0},
      {10.0, 0.2, 0.0, -0.1},     {-0.5, 0.0, 1.0, 0.01}, {1.0, 2.0, 3.0, 4.0}};
  for (const auto& m : special) {
    for (double s : {0.5, 1.0}) CHECK(rel_diff(expm2(m, s), (s * to_eigen(m)).exp()) <= 1e-12);
  }
}

TEST_CASE("spectral radius matches eigenvalues") {
  std::mt19937_64 rng(777);
  std::uniform_real_distribution<double> u(0.0, 3.0);
  for (int i = 0; i < 500; ++i) {
    const Matrix2 m{u(rng), u(rng), u(rng), u(rng)};
    const auto ev = to_eigen(m).eigenvalues();
    const double ref = std::max(std::abs(ev[0]), std::abs(ev[1]));
    CHECK(spectral_radius(m) == doctest::Approx(ref).epsilon(1e-12));
  }
  CHECK(spectral_radius(Matrix2{0.0, -1.0, 1.0, 0.0}) == doctest::Approx(1.0));
}

TEST_CASE("two-phase generators and monodromy") {
  const auto r = rates(0.5, 10.0, 0.1, 5.0, 0.01);
  const Matrix2 Ma = day_generator(r);
  const Matrix2 Mb = night_generator(r);
  CHECK(Ma.a == 10.0);
  CHECK(Ma.b == 0.2);
  CHECK(Ma.c == 0.0);
  CHECK(Ma.d == -0.1);
  CHECK(Mb.a == -5.0);
  CHECK(Mb.b == 0.0);
  CHECK(Mb.c == 10.0);
  CHECK(Mb.d == 0.01);
  const Eigen::Matrix2d ref = (0.5 * to_eigen(Mb)).exp() * (0.5 * to_eigen(Ma)).exp();
  CHECK(rel_diff(two_phase_monodromy(r), ref) <= 1e-12);
}

TEST_CASE("triangular case has the closed-form growth rate") {
  CHECK(counterexample_lambda(rates(0.5, 0.0, 0.0, 0.0, 0.0)) == doctest::Approx(0.0).scale(1.0).epsilon(1e-15));
  CHECK(counterexample_lambda(rates(0.5, 2.0, 0.0, 1.0, 0.0)) == doctest::Approx(0.5).epsilon(1e-12));
  for (double alpha : {0.2, 0.5, 0.8}) {
    for (double a1 : {0.0, 1.0, 10.0}) {
      for (double b1 = 0.0; b1 <= 12.0; b1 += 0.5) {
        const double expect = std::max(alpha * a1 - (1.0 - alpha) * b1, 0.0);
        CHECK(std::abs(counterexample_lambda(rates(alpha, a1, 0.0, b1, 0.0)) - expect) <= 1e-12);
      }
    }
  }
}

TEST_CASE("a larger division rate can lower the growth rate") {
  const auto low = rates(0.5, 10.0, 0.1, 0.0, 0.01);
  const auto high = rates(0.5, 10.0, 0.1, 5.0, 0.01);
  CHECK(counterexample_lambda(high) < counterexample_lambda(low));
  // pointwise larger kernel, smaller growth rate, in the triangular case too
  CHECK(counterexample_lambda(rates(0.5, 10.0, 0.0, 5.0, 0.0)) <
        counterexample_lambda(rates(0.5, 10.0, 0.0, 1.0, 0.0)));
}

TEST_CASE("growth-rate surface") {
  const auto surf = counterexample_surface(10.0, 0.1, {0.0, 5.0}, {0.0, 5.0}, 21);
  REQUIRE(surf.b1.size() == 21);
  REQUIRE(surf.b2.size() == 21);
  CHECK(surf.b1.front() == 0.0);
  CHECK(surf.b1.back() == 5.0);
  for (std::size_t i = 0; i < 21; ++i) {
    for (std::size_t j = 0; j < 21; ++j) {
      CHECK(surf.lambda[i][j] ==
            doctest::Approx(counterexample_lambda(rates(0.5, 10.0, 0.1, surf.b1[i], surf.b2[j]))));
    }
  }
  // small b2: strictly decreasing in b1
  const auto thin = counterexample_surface(10.0, 0.1, {0.0, 5.0}, {0.01, 0.01}, 26);
  for (std::size_t i = 1; i < thin.b1.size(); ++i) CHECK(thin.lambda[i][0] < thin.lambda[i - 1][0]);

  // neighbour jumps shrink under refinement
  auto max_jump = [](const RateSurface& s) {
    double w = 0.0;
    for (std::size_t i = 0; i < s.b1.size(); ++i) {
      for (std::size_t j = 0; j < s.b2.size(); ++j) {
        if (i + 1 < s.b1.size()) w = std::max(w, std::abs(s.lambda[i + 1][j] - s.lambda[i][j]));
        if (j + 1 < s.b2.size()) w = std::max(w, std::abs(s.lambda[i][j + 1] - s.lambda[i][j]));
      }
    }
    return w;
  };
  const double coarse = max_jump(counterexample_surface(10.0, 0.1, {0.0, 5.0}, {0.0, 5.0}, 11));
  const double fine = max_jump(counterexample_surface(10.0, 0.1, {0.0, 5.0}, {0.0, 5.0}, 41));
  CHECK(fine < 0.5 * coarse);

  // large b2: sign of the b1 differences is reported, not asserted
  const auto thick = counterexample_surface(10.0, 0.1, {0.0, 5.0}, {5.0, 5.0}, 11);
  MESSAGE("b1 slope at b2 = 5: " << thick.lambda[10][0] - thick.lambda[0][0]);

  CHECK_THROWS_AS(counterexample_surface(10.0, 0.1, {0.0, 5.0}, {0.0, 5.0}, 1), ModelError);
}

TEST_CASE("aggregated dynamics") {
  const auto r = rates(0.5, 10.0, 0.1, 2.0, 0.3);
  const auto traj = aggregated_ode_simulate(r, 20);
  CHECK(traj.growth_rate == doctest::Approx(counterexample_lambda(r)).epsilon(1e-12));
  for (const auto& d : traj.direction) {
    CHECK(d[0] >= 0.0);
    CHECK(d[1] >= 0.0);
  }
  const auto zero = aggregated_ode_simulate(rates(0.5, 0.0, 0.0, 0.0, 0.0), 3, {2.0, 5.0});
  for (double lm : zero.log_mass) CHECK(lm == doctest::Approx(std::log(7.0)).epsilon(1e-14));
  CHECK(zero.growth_rate == doctest::Approx(0.0).scale(1.0));

  std::mt19937_64 rng(99);
  std::uniform_real_distribution<double> u(0.0, 6.0);
  for (int i = 0; i < 200; ++i) {
    const auto ri = rates(0.3, u(rng), u(rng), u(rng), u(rng));
    const auto t = aggregated_ode_simulate(ri, 10);
    for (const auto& d : t.direction) CHECK(std::min(d[0], d[1]) >= 0.0);
    // each period applies the monodromy exactly
    const Eigen::Matrix2d M = to_eigen(two_phase_monodromy(ri));
    for (std::size_t k = 0; k + 2 < t.direction.size(); k += 2) {
      const Eigen::Vector2d next = M * Eigen::Vector2d(t.direction[k][0], t.direction[k][1]);
      CHECK(t.log_mass[k + 2] - t.log_mass[k] == doctest::Approx(std::log(next.sum())).epsilon(1e-12));
    }
    // the last-period rate converges geometrically in the eigenvalue ratio
    const auto ev = M.eigenvalues();
    const double q = std::min(std::abs(ev[0]), std::abs(ev[1])) / std::max(std::abs(ev[0]), std::abs(ev[1]));
    const double lam = counterexample_lambda(ri);
    const double long_err = std::abs(aggregated_ode_simulate(ri, 400).growth_rate - lam);
    CHECK(long_err <= std::abs(t.growth_rate - lam) + 1e-12);
    if (q <= 0.9) CHECK(long_err <= 1e-11);
  }
  CHECK_THROWS_AS(aggregated_ode_simulate(r, 0), ModelError);
  CHECK_THROWS_AS(aggregated_ode_simulate(rates(1.5, 1.0, 1.0, 1.0, 1.0), 2), ModelError);
}

TEST_CASE("constant-rate growth rate") {
  const double mu = constant_psi_lambda(1.0, AgeModulation::one(), 1.0);
  CHECK(mu == doctest::Approx(newton_root(1.0, 1.0)).epsilon(1e-12));
  CHECK(mu == doctest::Approx(0.3748225281836).epsilon(1e-12));
  CHECK(2.0 * std::exp(-mu) == doctest::Approx(mu + 1.0).epsilon(1e-12));

  double prev = 0.0;
  for (double ka : {0.1, 1.0, 10.0, 100.0, 1e4}) {
    for (double a : {0.3, 1.0, 2.5}) {
      const double m = constant_psi_lambda(ka, AgeModulation::one(), a);
      CHECK(m == doctest::Approx(newton_root(ka, a)).epsilon(1e-11));
      CHECK(m > 0.0);
      CHECK(m <= kLog2 / a);
    }
    const double m1 = constant_psi_lambda(ka, AgeModulation::one(), 1.0);
    CHECK(m1 > prev);
    prev = m1;
  }
  CHECK(constant_psi_lambda(1e6, AgeModulation::one(), 1.0) == doctest::Approx(kLog2).epsilon(1e-5));
  CHECK_THROWS_AS(constant_psi_lambda(0.0, AgeModulation::one(), 1.0), ModelError);
}

TEST_CASE("constant-rate growth rate with a tabulated age modulation") {
  const auto B = AgeModulation::tabulated({0.5, 1.0, 3.0}, 0.4, true);
  const double a = 0.3;
  const double ka = 2.0;
  const double mu = constant_psi_lambda(ka, B, a);
  // midpoint quadrature of 2 int_a^inf ka B exp(-mu x - ka int_a^x B) dx
  const double h = 1e-5;
  double integral = 0.0;
  double hazard = 0.0;
  for (double x = a; x < 40.0; x += h) {
    const double bx = B(x + 0.5 * h);
    const double mid = hazard + 0.5 * h * ka * bx;
    integral += ka * bx * std::exp(-mu * (x + 0.5 * h) - mid) * h;
    hazard += h * ka * bx;
  }
  CHECK(2.0 * integral == doctest::Approx(1.0).epsilon(1e-6));
  CHECK(mu <= kLog2 / a);
}

TEST_CASE("renewal spectral radius") {
  const DivisionKernel sq(3.0, TimeModulation::square_wave(0.6, 1.0), AgeModulation::one(), 0.22);
  const DivisionKernel fl(1.0, TimeModulation::constant(1.0), AgeModulation::one(), 1.0);
  for (const auto& k : {sq, fl}) {
    CHECK(renewal_rho(k, 1e-8, 64) == doctest::Approx(2.0).epsilon(5e-4));
    double prev = INFINITY;
    for (double lambda : {0.01, 0.1, 0.3, 0.6, 1.0, 2.0, 4.0}) {
      const double rho = renewal_rho(k, lambda, 64);
      CHECK(rho < prev);
      CHECK(rho > 0.0);
      prev = rho;
    }
  }
  // doubling the truncation changes nothing visible
  for (double lambda : {0.05, 0.5, 2.0}) {
    const double base = renewal_rho(sq, lambda, 64);
    const double doubled = renewal_rho(sq, lambda, 64, RenewalCutoff{1e-28, 20});
    CHECK(std::abs(base - doubled) <= 1e-12 * base);
  }
  CHECK_THROWS_AS(renewal_rho(sq, 0.5, 64, RenewalCutoff{0.0, 10}), ModelError);
  CHECK_THROWS_AS(renewal_rho(sq, 0.0, 64), ModelError);
  CHECK_THROWS_AS(renewal_rho(sq, 0.5, 8), ModelError);
}

TEST_CASE("renewal eigenvalue") {
  for (double kappa : {0.5, 1.0, 4.0}) {
    const DivisionKernel k(kappa, TimeModulation::constant(1.0), AgeModulation::one(), 1.0);
    const double exact = constant_psi_lambda(kappa, AgeModulation::one(), 1.0);
    double prev = INFINITY;
    for (long nodes : {32L, 64L, 128L}) {
      const double err = std::abs(renewal_lambda(k, nodes, 1e-13) - exact);
      CHECK(err < 0.3 * prev);
      prev = err;
    }
    CHECK(prev <= 2e-5);
  }
  const DivisionKernel sq(3.0, TimeModulation::square_wave(0.6, 1.0), AgeModulation::one(), 0.22);
  const double l1 = renewal_lambda(sq, 100);
  const double l2 = renewal_lambda(sq, 200);
  CHECK(l1 > 0.0);
  CHECK(l1 <= kLog2 / 0.22);
  CHECK(std::abs(l2 - l1) < 0.05);
  CHECK(renewal_rho(sq, l2, 200) == doctest::Approx(1.0).epsilon(1e-8));
  CHECK_THROWS_AS(renewal_lambda(sq, 100, 0.0), ModelError);
}
