#pragma once

#include <cmath>
#include <cstddef>

#include "fairdyn/error.hpp"

namespace fairdyn {

struct RootResult {
  double x = 0.0;
  double fx = 0.0;
  double lo = 0.0;  // final bracket
  double hi = 0.0;
  std::size_t iterations = 0;
  bool converged = false;
};

/// Bracketed root of a continuous f with f(lo), f(hi) of opposite sign.
///
/// Regula falsi with the Illinois modification, falling back to a plain
/// bisection every third iteration (and whenever the secant point leaves
/// the bracket) so the bracket at least halves every three steps even on
/// very flat functions. Stops when |f(x)| <= ftol, when the bracket
/// collapses to adjacent doubles, or after max_iter iterations; the last
/// two leave `converged` false.
template <typename F>
RootResult find_bracketed_root(F&& f, double lo, double hi, double ftol, std::size_t max_iter = 200) {
  double flo = f(lo);
  double fhi = f(hi);
  if (std::fabs(flo) <= ftol) return {lo, flo, lo, hi, 0, true};
  if (std::fabs(fhi) <= ftol) return {hi, fhi, lo, hi, 0, true};
  if (std::signbit(flo) == std::signbit(fhi)) throw SolverError("find_bracketed_root: interval does not bracket a root");

  // Scaled copies used only by the secant formula; the true signs live in flo/fhi.
  double wlo = flo, whi = fhi;
  int last_side = 0;
  RootResult best{lo, flo, lo, hi, 0, false};
  if (std::fabs(fhi) < std::fabs(flo)) best.x = hi, best.fx = fhi;

  for (std::size_t it = 1; it <= max_iter; ++it) {
    const double mid = lo + 0.5 * (hi - lo);
    double x = mid;
    if (it % 3 != 0) {
      const double secant = lo - wlo * (hi - lo) / (whi - wlo);
      if (secant > lo && secant < hi) x = secant;
    }
    if (!(x > lo && x < hi)) {
      best.lo = lo, best.hi = hi, best.iterations = it;
      return best;  // bracket is down to adjacent doubles
    }
    const double fx = f(x);
    if (std::fabs(fx) < std::fabs(best.fx)) best.x = x, best.fx = fx;
    if (std::fabs(fx) <= ftol) return {x, fx, lo, hi, it, true};

    if (std::signbit(fx) == std::signbit(flo)) {
      lo = x, flo = fx, wlo = fx;
      if (last_side == -1) whi *= 0.5;
      last_side = -1;
    } else {
      hi = x, fhi = fx, whi = fx;
      if (last_side == +1) wlo *= 0.5;
      last_side = +1;
    }
  }
  best.lo = lo, best.hi = hi, best.iterations = max_iter;
  return best;
}

}  // namespace fairdyn
