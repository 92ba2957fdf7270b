#pragma once

#include <array>

namespace fgrowth {

/// Row-major 2x2 real matrix [[a, b], [c, d]].
struct Matrix2 {
  double a = 0.0;
  double b = 0.0;
  double c = 0.0;
  double d = 0.0;

  static Matrix2 identity() { return {1.0, 0.0, 0.0, 1.0}; }
  static Matrix2 diag(double x, double y) { return {x, 0.0, 0.0, y}; }

  double trace() const { return a + d; }
  double det() const { return a * d - b * c; }

  std::array<double, 2> operator*(const std::array<double, 2>& v) const {
    return {a * v[0] + b * v[1], c * v[0] + d * v[1]};
  }
};

Matrix2 operator*(const Matrix2& x, const Matrix2& y);
Matrix2 operator+(const Matrix2& x, const Matrix2& y);
Matrix2 operator*(double s, const Matrix2& m);

/// exp(s M) in closed form.
///
/// With A = s M = mu I + B, mu = tr(A)/2 and B^2 = delta I:
/// distinct real eigenvalues use the spectral projectors, a complex pair uses
/// cos/sin, and |tr^2 - 4 det| < 1e-12 uses the Jordan form with a Taylor
/// correction in delta.
Matrix2 expm2(const Matrix2& M, double s = 1.0);

/// Largest root modulus of the characteristic polynomial (the Perron root of
/// a nonnegative matrix); the modulus for a complex pair.
double spectral_radius(const Matrix2& M);

}  // namespace fgrowth
