#pragma once

#include <cmath>
#include <limits>
#include <stdexcept>

#include "fairdyn/normal.hpp"
#include "fairdyn/scenario.hpp"

namespace fairdyn {

/// Means at or below this are the zero-mean limit for the exponential and
/// Pareto families: all mass sits at zero, so the tail is 0 for theta > 0
/// and 1 for theta <= 0. A Gaussian at mean zero is an ordinary Gaussian.
inline constexpr double kDegenerateMean = 1e-12;

inline bool is_degenerate(const DistributionSpec& d, double mean) {
  return d.family != Family::Gaussian && mean <= kDegenerateMean;
}

/// Lowest score with positive density. Pareto's scale is (k-1)/k times the
/// mean; the Gaussian has no lower end.
inline double support_min(const DistributionSpec& d, double mean) {
  switch (d.family) {
    case Family::Exponential: return 0.0;
    case Family::Pareto: return is_degenerate(d, mean) ? 0.0 : (d.k - 1.0) / d.k * mean;
    case Family::Gaussian: return -std::numeric_limits<double>::infinity();
  }
  return 0.0;
}

namespace detail {
inline void check_tail_args(const DistributionSpec& d, double mean) {
  validate(d);
  if (!(mean >= 0.0) || !std::isfinite(mean)) throw std::domain_error("mean must be finite and >= 0");
}
}  // namespace detail

/// P(q >= theta) for a score distribution with the given mean.
inline double tail_probability(const DistributionSpec& d, double mean, double theta) {
  detail::check_tail_args(d, mean);
  if (std::isnan(theta)) throw std::domain_error("theta is NaN");
  if (is_degenerate(d, mean)) return theta <= 0.0 ? 1.0 : 0.0;
  switch (d.family) {
    case Family::Exponential:
      return theta <= 0.0 ? 1.0 : std::exp(-theta / mean);
    case Family::Pareto: {
      const double scale = (d.k - 1.0) / d.k * mean;
      return theta <= scale ? 1.0 : std::pow(scale / theta, d.k);
    }
    case Family::Gaussian:
      return std_normal_sf((theta - mean) / d.sigma);
  }
  return 0.0;
}

/// The threshold whose tail mass is P, for P in (0, 1]. P = 1 returns the
/// support minimum (-inf for the Gaussian).
inline double inverse_tail(const DistributionSpec& d, double mean, double P) {
  detail::check_tail_args(d, mean);
  if (!(P > 0.0 && P <= 1.0)) throw std::domain_error("inverse_tail: P must lie in (0,1]");
  if (mean <= 0.0 || is_degenerate(d, mean))
    throw std::domain_error("inverse_tail: mean must be positive");
  if (P == 1.0) return support_min(d, mean);
  switch (d.family) {
    case Family::Exponential: return -mean * std::log(P);
    case Family::Pareto: return (d.k - 1.0) / d.k * mean * std::pow(P, -1.0 / d.k);
    case Family::Gaussian: return mean - d.sigma * std_normal_quantile(P);
  }
  return 0.0;
}

inline double density(const DistributionSpec& d, double mean, double q) {
  validate(d);
  if (!std::isfinite(mean) || (d.family != Family::Gaussian && !(mean > 0.0)))
    throw std::domain_error("density: mean must be positive");
  switch (d.family) {
    case Family::Exponential:
      return q < 0.0 ? 0.0 : std::exp(-q / mean) / mean;
    case Family::Pareto: {
      const double scale = (d.k - 1.0) / d.k * mean;
      if (q < scale) return 0.0;
      // (k-1)^k / k^(k-1) * mean^k / q^(k+1), written via the scale to avoid overflow.
      return d.k / q * std::pow(scale / q, d.k);
    }
    case Family::Gaussian:
      return std_normal_pdf((q - mean) / d.sigma) / d.sigma;
  }
  return 0.0;
}

}  // namespace fairdyn
