#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <string_view>

namespace fairdyn {

/// Row-major 2x2 real matrix.
struct Matrix2 {
  std::array<double, 4> a{};

  static Matrix2 diag(double d0, double d1) { return {{d0, 0.0, 0.0, d1}}; }
  static Matrix2 identity() { return diag(1.0, 1.0); }

  double operator()(int i, int j) const { return a[static_cast<std::size_t>(2 * i + j)]; }
  double& operator()(int i, int j) { return a[static_cast<std::size_t>(2 * i + j)]; }

  double trace() const { return a[0] + a[3]; }
  double det() const { return a[0] * a[3] - a[1] * a[2]; }

  friend bool operator==(const Matrix2&, const Matrix2&) = default;
};

inline double max_abs_diff(const Matrix2& x, const Matrix2& y) {
  double m = 0.0;
  for (std::size_t i = 0; i < 4; ++i) m = std::max(m, std::fabs(x.a[i] - y.a[i]));
  return m;
}

using Eigenvalues = std::array<std::complex<double>, 2>;

/// Roots of lambda^2 - tr lambda + det, largest magnitude first.
///
/// The discriminant is formed as ((a-d)/2)^2 + bc rather than tr^2/4 - det,
/// and real roots use the sign-matched quadratic formula plus Vieta for the
/// second root so neither loses digits to cancellation.
inline Eigenvalues eigen2(const Matrix2& m) {
  const double half_tr = 0.5 * m.trace();
  const double half_diff = 0.5 * (m(0, 0) - m(1, 1));
  const double disc = half_diff * half_diff + m(0, 1) * m(1, 0);
  Eigenvalues ev;
  if (disc >= 0.0) {
    const double root = std::sqrt(disc);
    const double big = half_tr + std::copysign(root, half_tr);
    if (big == 0.0) {
      ev = {std::complex<double>(root, 0.0), std::complex<double>(-root, 0.0)};
    } else {
      ev = {std::complex<double>(big, 0.0), std::complex<double>(m.det() / big, 0.0)};
    }
  } else {
    const double im = std::sqrt(-disc);
    ev = {std::complex<double>(half_tr, im), std::complex<double>(half_tr, -im)};
  }
  if (std::abs(ev[1]) > std::abs(ev[0])) std::swap(ev[0], ev[1]);
  return ev;
}

inline double spectral_radius(const Eigenvalues& ev) { return std::max(std::abs(ev[0]), std::abs(ev[1])); }

enum class Stability { Stable, Unstable, Marginal };

inline std::string_view to_string(Stability s) {
  switch (s) {
    case Stability::Stable: return "stable";
    case Stability::Unstable: return "unstable";
    case Stability::Marginal: return "marginal";
  }
  return "?";
}

/// Dead band around |lambda| = 1.
inline constexpr double kClassifyTolerance = 1e-6;

inline Stability classify(const Eigenvalues& ev, double tol = kClassifyTolerance) {
  const double r = spectral_radius(ev);
  if (r < 1.0 - tol) return Stability::Stable;
  if (r > 1.0 + tol) return Stability::Unstable;
  return Stability::Marginal;
}

}  // namespace fairdyn
