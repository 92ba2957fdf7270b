#pragma once

#include <cmath>
#include <string>

#include "fgrowth/errors.hpp"

namespace fgrowth {

/// Root of a continuous function on [lo, hi] by plain bisection.
///
/// Requires f(lo) and f(hi) to have opposite signs (or one of them zero);
/// throws NoRoot otherwise. Stops once the bracket is narrower than `xtol`.
template <class F>
double bisect(F&& f, double lo, double hi, double xtol, int max_iter = 200) {
  double flo = f(lo);
  double fhi = f(hi);
  if (flo == 0.0) return lo;
  if (fhi == 0.0) return hi;
  if (std::signbit(flo) == std::signbit(fhi)) {
    throw NoRoot("no sign change on [" + std::to_string(lo) + ", " + std::to_string(hi) + "]");
  }
  for (int i = 0; i < max_iter && hi - lo > xtol; ++i) {
    const double mid = 0.5 * (lo + hi);
    const double fm = f(mid);
    if (fm == 0.0) return mid;
    if (std::signbit(fm) == std::signbit(flo)) {
      lo = mid;
      flo = fm;
    } else {
      hi = mid;
    }
  }
  return 0.5 * (lo + hi);
}

}  // namespace fgrowth
