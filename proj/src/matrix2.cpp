#include "fgrowth/matrix2.hpp"

#include <algorithm>
#include <cmath>

namespace fgrowth {

Matrix2 operator*(const Matrix2& x, const Matrix2& y) {
  return {x.a * y.a + x.b * y.c, x.a * y.b + x.b * y.d, x.c * y.a + x.d * y.c,
          x.c * y.b + x.d * y.d};
}

Matrix2 operator+(const Matrix2& x, const Matrix2& y) {
  return {x.a + y.a, x.b + y.b, x.c + y.c, x.d + y.d};
}

Matrix2 operator*(double s, const Matrix2& m) { return {s * m.a, s * m.b, s * m.c, s * m.d}; }

Matrix2 expm2(const Matrix2& M, double s) {
  const Matrix2 A = s * M;
  const double mu = 0.5 * A.trace();
  const Matrix2 B{A.a - mu, A.b, A.c, A.d - mu};
  const double half_gap = 0.5 * (A.a - A.d);
  const double delta = half_gap * half_gap + A.b * A.c;  // B^2 = delta I
  const double disc = A.trace() * A.trace() - 4.0 * A.det();

  double c0 = 0.0;  // exp(A) = e^mu (c0 I + c1 B)
  double c1 = 0.0;
  if (std::abs(disc) < 1e-12) {
    c0 = 1.0 + delta / 2.0 + delta * delta / 24.0;
    c1 = 1.0 + delta / 6.0 + delta * delta / 120.0;
  } else if (delta > 0.0) {
    const double r = std::sqrt(delta);
    if (r > 1.0) {
      // exp(A) = e^l1 P1 + e^l2 P2 with projectors (A - l_other I) / (l - l_other)
      const double l1 = mu + r;
      const double l2 = mu - r;
      const double e1 = std::exp(l1) / (2.0 * r);
      const double e2 = std::exp(l2) / (2.0 * r);
      return {e1 * (A.a - l2) - e2 * (A.a - l1), (e1 - e2) * A.b, (e1 - e2) * A.c,
              e1 * (A.d - l2) - e2 * (A.d - l1)};
    }
    c0 = std::cosh(r);
    c1 = std::sinh(r) / r;
  } else {
    const double w = std::sqrt(-delta);
    c0 = std::cos(w);
    c1 = std::sin(w) / w;
  }
  const double e = std::exp(mu);
  return {e * (c0 + c1 * B.a), e * c1 * B.b, e * c1 * B.c, e * (c0 + c1 * B.d)};
}

double spectral_radius(const Matrix2& M) {
  const double half_tr = 0.5 * M.trace();
  const double disc = half_tr * half_tr - M.det();
  if (disc < 0.0) return std::sqrt(M.det());
  const double root = std::sqrt(disc);
  // The root of larger modulus first, the other from the product of roots.
  const double big = half_tr >= 0.0 ? half_tr + root : half_tr - root;
  const double small = big != 0.0 ? M.det() / big : 0.0;
  return std::max(std::abs(big), std::abs(small));
}

}  // namespace fgrowth
