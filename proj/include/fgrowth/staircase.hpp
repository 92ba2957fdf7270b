#pragma once

// Large-scaling limit of the growth rate for square-wave modulation with B = 1.

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <boost/rational.hpp>

namespace fgrowth {

using Rational = boost::rational<std::int64_t>;

/// Accepts "p/q", integers and finite decimals ("0.22"). Throws ModelError.
Rational parse_rational(std::string_view text);
std::string to_string(const Rational& r);
double to_double(const Rational& r);

/// Summary of the staircase step containing a. Num is double or Rational.
template <class Num>
struct StaircaseResult {
  long N_a = 0;
  long p_a = 0;
  double lambda_inf = 0.0;
  Num a_l{};
  Num a_r{};
  /// Whether a_r itself belongs to the step (a_r is then an E_tau point).
  bool a_r_included = false;
  double rate_bound = 0.0;
};

// All of the following take 0 < tau < T and a > 0 and throw ModelError
// otherwise. The double overloads decide window membership with tolerance
// 1e-12 and resolve ties into the closed window [tau, T] + N T.

/// Smallest k >= 1 with k a in [tau, T] + N T.
template <class Num>
long compute_Na(const Num& a, const Num& tau, const Num& T);

/// Smallest k >= 1 with k a in [tau, T) + N T; nullopt when there is none,
/// which happens exactly when N_a a is a multiple of T.
template <class Num>
std::optional<long> compute_Ka(const Num& a, const Num& tau, const Num& T);

/// N_a log 2 / (ceil(N_a a / T) T).
template <class Num>
double lambda_infinity(const Num& a, const Num& tau, const Num& T);

/// Infimum and supremum of {a' : lambda_infinity(a') = lambda_infinity(a)}.
template <class Num>
std::pair<Num, Num> step_interval(const Num& a, const Num& tau, const Num& T);

/// min((a_r - a)/2, tau).
template <class Num>
double rate_bound(const Num& a, const Num& tau, const Num& T);

template <class Num>
StaircaseResult<Num> staircase(const Num& a, const Num& tau, const Num& T);

/// Right ends a_r in [a_lo, a_hi] of steps that contain their right end.
/// After each hit the walk resumes at a_r + resolution.
template <class Num>
std::vector<Num> scan_E_tau(const Num& tau, const Num& T, const Num& a_lo, const Num& a_hi,
                            const Num& resolution);

struct JumpTrajectory {
  std::vector<double> division_times;
  /// Number of divisions at times <= t.
  long m_of_t(double t) const;
};

/// Division times of a single lineage in the infinite-scaling limit: a cell
/// divides as soon as it reaches age a, unless that instant falls in a
/// blocked window [tau, T) + N T, in which case it waits for the next
/// multiple of T. Records every division time <= horizon.
JumpTrajectory simulate_jump_process(double x0, double a, double tau, double T, double horizon);

/// Tube conditions on candidate division times:
///   theta_1 >= max(a - T + tau, 0),
///   theta_{i+1} - (theta_i + eps) >= a,
///   theta_i + eps < floor(theta_i / T) T + tau.
bool check_theta_sequence(const std::vector<double>& thetas, double eps, double a, double tau,
                          double T);

}  // namespace fgrowth
