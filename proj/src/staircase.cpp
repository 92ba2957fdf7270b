#include "fgrowth/staircase.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <numbers>
#include <type_traits>

#include "fgrowth/errors.hpp"

namespace fgrowth {

namespace {

constexpr double kTol = 1e-12;
constexpr long kMaxFloatMultiple = 1'000'000;

template <class Num>
struct Ops;

template <>
struct Ops<Rational> {
  static long floor(const Rational& x) {
    std::int64_t q = x.numerator() / x.denominator();
    if (x.numerator() < 0 && q * x.denominator() != x.numerator()) --q;
    return static_cast<long>(q);
  }
  static long ceil(const Rational& x) { return -floor(-x); }
  static bool is_integer(const Rational& x) { return x.denominator() == 1; }
  static bool in_closed_window(const Rational& x, const Rational& tau) {
    const Rational f = x - Rational(floor(x));
    return f.numerator() == 0 || f >= tau;
  }
  static bool in_half_open_window(const Rational& x, const Rational& tau) {
    const Rational f = x - Rational(floor(x));
    return f.numerator() != 0 && f >= tau;
  }
  static bool less(const Rational& x, const Rational& y) { return x < y; }
  static bool same(const Rational& x, const Rational& y) { return x == y; }
  static double to_d(const Rational& x) { return to_double(x); }
  static long max_multiple() { return std::numeric_limits<long>::max(); }
};

template <>
struct Ops<double> {
  static double tol(double x) { return kTol * std::max(1.0, std::abs(x)); }
  static bool is_integer(double x) { return std::abs(x - std::round(x)) <= tol(x); }
  // Values within tolerance below an integer snap up onto it.
  static long floor(double x) {
    if (is_integer(x)) return std::lround(x);
    return static_cast<long>(std::floor(x));
  }
  static long ceil(double x) {
    if (is_integer(x)) return std::lround(x);
    return static_cast<long>(std::ceil(x));
  }
  static bool in_closed_window(double x, double tau) {
    if (is_integer(x)) return true;
    return x - std::floor(x) >= tau - tol(x);
  }
  static bool in_half_open_window(double x, double tau) {
    if (is_integer(x)) return false;
    return x - std::floor(x) >= tau - tol(x);
  }
  static bool less(double x, double y) { return x < y - tol(y); }
  static bool same(double x, double y) { return std::abs(x - y) <= tol(y); }
  static double to_d(double x) { return x; }
  static long max_multiple() { return kMaxFloatMultiple; }
};

template <class Num>
void validate(const Num& a, const Num& tau, const Num& T) {
  if (!(T > Num(0))) throw ModelError("period must be > 0");
  if (!(tau > Num(0) && tau < T)) throw ModelError("need 0 < tau < T");
  if (!(a > Num(0))) throw ModelError("majority age must be > 0");
}

// Smallest k with k*A in the window, A and S normalized by the period.
template <class Num, class Pred>
std::optional<long> first_multiple(const Num& A, const Num& S, long cap, Pred in_window) {
  Num x = A;
  for (long k = 1; k <= cap; ++k, x += A) {
    if (in_window(x, S)) return k;
  }
  return std::nullopt;
}

using i128 = __int128;

// Smallest x >= 0 with l <= (a x mod m) <= r, for 0 <= l <= r < m, 0 <= a < m.
std::optional<i128> min_residue_hit(i128 a, i128 m, i128 l, i128 r) {
  if (l == 0) return 0;
  if (a == 0) return std::nullopt;
  const i128 x = (l + a - 1) / a;
  if (a * x <= r) return x;
  // [l, r] holds no multiple of a: find the fewest wraps y, then x.
  const auto y = min_residue_hit(m % a, a, a - r % a, a - l % a);
  if (!y) return std::nullopt;
  return (l + m * *y + a - 1) / a;
}

// Exact N_a in O(log q) for A = p/q: the first k with k p mod q in
// [ceil(S q), q - 1], or k = q where k A first becomes an integer.
long rational_Na(const Rational& A, const Rational& S) {
  const i128 p = A.numerator();
  const i128 q = A.denominator();
  const i128 u = S.numerator();
  const i128 v = S.denominator();
  const i128 lo = (u * q + v - 1) / v;
  i128 best = q;
  if (lo <= q - 1) {
    if (const auto k = min_residue_hit(p % q, q, lo, q - 1); k && *k < best) best = *k;
  }
  return static_cast<long>(best);
}

template <class Num>
long normalized_Na(const Num& A, const Num& S) {
  if constexpr (std::is_same_v<Num, Rational>) return rational_Na(A, S);
  auto k = first_multiple(A, S, Ops<Num>::max_multiple(), Ops<Num>::in_closed_window);
  if (!k) throw ModelError("no multiple of a reaches the closed window within the search cap");
  return *k;
}

template <class Num>
struct Step {
  long N;
  long p;
  Num left;
  Num right;
  bool right_included;
};

// On a step the pair (N_a, p_a) is fixed and for k < N_a the integer part of
// k a is fixed with k a strictly inside (m_k, m_k + tau); the step is cut out
// by those constraints together with N_a a in [p_a + tau, p_a + 1].
template <class Num>
Step<Num> normalized_step(const Num& A, const Num& S) {
  using O = Ops<Num>;
  Step<Num> s;
  s.N = normalized_Na(A, S);
  s.p = O::ceil(A * Num(s.N)) - 1;
  s.right = Num(s.p + 1) / Num(s.N);
  s.left = (Num(s.p) + S) / Num(s.N);
  s.right_included = true;
  Num x = A;
  for (long k = 1; k < s.N; ++k, x += A) {
    const long m = O::floor(x);
    const Num r = (Num(m) + S) / Num(k);
    if (O::less(r, s.right)) {
      s.right = r;
      s.right_included = false;
    } else if (O::same(r, s.right)) {
      s.right_included = false;
    }
    s.left = std::max(s.left, Num(m) / Num(k));
  }
  return s;
}

}  // namespace

Rational parse_rational(std::string_view text) {
  while (!text.empty() && std::isspace(static_cast<unsigned char>(text.front()))) text.remove_prefix(1);
  while (!text.empty() && std::isspace(static_cast<unsigned char>(text.back()))) text.remove_suffix(1);
  auto fail = [&]() -> Rational {
    throw ModelError("not a rational number: '" + std::string(text) + "'");
  };
  auto parse_int = [&](std::string_view s, std::int64_t& out) {
    if (s.empty()) return false;
    const char* first = s.data();
    if (*first == '+') ++first;
    auto [ptr, ec] = std::from_chars(first, s.data() + s.size(), out);
    return ec == std::errc() && ptr == s.data() + s.size();
  };
  if (text.empty()) return fail();

  if (auto slash = text.find('/'); slash != std::string_view::npos) {
    std::int64_t num = 0;
    std::int64_t den = 0;
    if (!parse_int(text.substr(0, slash), num) || !parse_int(text.substr(slash + 1), den) ||
        den == 0) {
      return fail();
    }
    return Rational(num, den);
  }

  const auto dot = text.find('.');
  if (dot == std::string_view::npos) {
    std::int64_t num = 0;
    if (!parse_int(text, num)) return fail();
    return Rational(num);
  }
  std::string_view whole = text.substr(0, dot);
  std::string_view frac = text.substr(dot + 1);
  if (frac.size() > 17 || frac.find_first_not_of("0123456789") != std::string_view::npos) {
    return fail();
  }
  bool negative = false;
  if (!whole.empty() && (whole.front() == '-' || whole.front() == '+')) {
    negative = whole.front() == '-';
    whole.remove_prefix(1);
  }
  if (whole.empty() && frac.empty()) return fail();
  if (whole.find_first_not_of("0123456789") != std::string_view::npos) return fail();
  std::int64_t scale = 1;
  for (std::size_t i = 0; i < frac.size(); ++i) scale *= 10;
  std::int64_t w = 0;
  std::int64_t f = 0;
  if (!whole.empty() && !parse_int(whole, w)) return fail();
  if (!frac.empty() && !parse_int(frac, f)) return fail();
  Rational r = Rational(w) + Rational(f, scale);
  return negative ? -r : r;
}

std::string to_string(const Rational& r) {
  return std::to_string(r.numerator()) + "/" + std::to_string(r.denominator());
}

double to_double(const Rational& r) {
  return static_cast<double>(r.numerator()) / static_cast<double>(r.denominator());
}

template <class Num>
long compute_Na(const Num& a, const Num& tau, const Num& T) {
  validate(a, tau, T);
  return normalized_Na<Num>(a / T, tau / T);
}

template <class Num>
std::optional<long> compute_Ka(const Num& a, const Num& tau, const Num& T) {
  validate(a, tau, T);
  const Num A = a / T;
  const Num S = tau / T;
  const long N = normalized_Na(A, S);
  // Multiples of A repeat modulo 1 with period N once N A is an integer.
  if (Ops<Num>::is_integer(A * Num(N))) return std::nullopt;
  return N;
}

template <class Num>
double lambda_infinity(const Num& a, const Num& tau, const Num& T) {
  validate(a, tau, T);
  const Num A = a / T;
  const long N = normalized_Na<Num>(A, tau / T);
  const long q = Ops<Num>::ceil(A * Num(N));
  return static_cast<double>(N) * std::numbers::ln2 /
         (static_cast<double>(q) * Ops<Num>::to_d(T));
}

template <class Num>
StaircaseResult<Num> staircase(const Num& a, const Num& tau, const Num& T) {
  validate(a, tau, T);
  const Step<Num> s = normalized_step<Num>(a / T, tau / T);
  StaircaseResult<Num> out;
  out.N_a = s.N;
  out.p_a = s.p;
  out.lambda_inf = static_cast<double>(s.N) * std::numbers::ln2 /
                   (static_cast<double>(s.p + 1) * Ops<Num>::to_d(T));
  out.a_l = s.left * T;
  out.a_r = s.right * T;
  out.a_r_included = s.right_included;
  const double gap = std::max(0.0, Ops<Num>::to_d(out.a_r - a));
  out.rate_bound = std::min(gap / 2.0, Ops<Num>::to_d(tau));
  return out;
}

template <class Num>
std::pair<Num, Num> step_interval(const Num& a, const Num& tau, const Num& T) {
  const auto r = staircase(a, tau, T);
  return {r.a_l, r.a_r};
}

template <class Num>
double rate_bound(const Num& a, const Num& tau, const Num& T) {
  return staircase(a, tau, T).rate_bound;
}

template <class Num>
std::vector<Num> scan_E_tau(const Num& tau, const Num& T, const Num& a_lo, const Num& a_hi,
                            const Num& resolution) {
  if (!(resolution > Num(0))) throw ModelError("resolution must be > 0");
  std::vector<Num> out;
  Num a = a_lo > Num(0) ? a_lo : resolution;
  for (long guard = 0; a <= a_hi && guard < 10'000'000; ++guard) {
    const auto s = staircase(a, tau, T);
    if (s.a_r_included) {
      if (s.a_r >= a_lo && s.a_r <= a_hi) out.push_back(s.a_r);
      a = s.a_r + resolution;
    } else {
      a = s.a_r > a ? s.a_r : a + resolution;
    }
  }
  return out;
}

#define FGROWTH_INSTANTIATE(Num)                                                          \
  template long compute_Na<Num>(const Num&, const Num&, const Num&);                     \
  template std::optional<long> compute_Ka<Num>(const Num&, const Num&, const Num&);      \
  template double lambda_infinity<Num>(const Num&, const Num&, const Num&);              \
  template std::pair<Num, Num> step_interval<Num>(const Num&, const Num&, const Num&);   \
  template double rate_bound<Num>(const Num&, const Num&, const Num&);                   \
  template StaircaseResult<Num> staircase<Num>(const Num&, const Num&, const Num&);      \
  template std::vector<Num> scan_E_tau<Num>(const Num&, const Num&, const Num&, const Num&, \
                                            const Num&);

FGROWTH_INSTANTIATE(double)
FGROWTH_INSTANTIATE(Rational)
#undef FGROWTH_INSTANTIATE

// ------------------------------------------------------------------ jump process

long JumpTrajectory::m_of_t(double t) const {
  const double tol = kTol * std::max(1.0, std::abs(t));
  return static_cast<long>(
      std::upper_bound(division_times.begin(), division_times.end(), t + tol) -
      division_times.begin());
}

JumpTrajectory simulate_jump_process(double x0, double a, double tau, double T, double horizon) {
  validate(a, tau, T);
  if (!(x0 >= 0.0)) throw ModelError("initial age must be >= 0");
  if (!std::isfinite(horizon)) throw ModelError("horizon must be finite");

  // Landing time c is permitted unless its phase lies in [tau, T).
  auto settle = [&](double c) {
    const double u = c / T;
    const long m = Ops<double>::floor(u);
    const double phase = (u - static_cast<double>(m)) * T;
    if (Ops<double>::is_integer(u) || phase < tau - kTol * T) return c;
    return static_cast<double>(m + 1) * T;
  };

  JumpTrajectory out;
  const double end = horizon + kTol * std::max(1.0, std::abs(horizon));
  double c = settle(std::max(0.0, a - x0));
  while (c <= end) {
    out.division_times.push_back(c);
    c = settle(c + a);
  }
  return out;
}

bool check_theta_sequence(const std::vector<double>& thetas, double eps, double a, double tau,
                          double T) {
  if (thetas.empty() || !(eps >= 0.0)) return false;
  auto tol = [](double x) { return kTol * std::max(1.0, std::abs(x)); };
  const double first = std::max(a - T + tau, 0.0);
  if (thetas.front() < first - tol(first)) return false;
  for (std::size_t i = 0; i < thetas.size(); ++i) {
    const double th = thetas[i];
    const double window_end = static_cast<double>(Ops<double>::floor(th / T)) * T + tau;
    if (!(th + eps < window_end)) return false;
    if (i + 1 < thetas.size() && thetas[i + 1] - (th + eps) < a - tol(a)) return false;
  }
  return true;
}

}  // namespace fgrowth
