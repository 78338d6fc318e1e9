#pragma once

#include <algorithm>
#include <cmath>
#include <sstream>
#include <string>

#include "fairdyn/distributions.hpp"
#include "fairdyn/root_finding.hpp"
#include "fairdyn/scenario.hpp"

namespace fairdyn {

/// Mean scores of the protected group (mu_c) and everyone else (mu_nc).
struct GroupState {
  double mu_c = 0.0;
  double mu_nc = 0.0;

  double gap() const noexcept { return mu_nc - mu_c; }
  friend bool operator==(const GroupState&, const GroupState&) = default;
};

inline void validate(const GroupState& x) {
  if (!(std::isfinite(x.mu_c) && x.mu_c >= 0.0 && std::isfinite(x.mu_nc) && x.mu_nc >= 0.0))
    throw std::domain_error("group means must be finite and >= 0");
}

inline double max_norm(const GroupState& a, const GroupState& b) {
  return std::max(std::fabs(a.mu_c - b.mu_c), std::fabs(a.mu_nc - b.mu_nc));
}

struct ThresholdSolution {
  double theta_c = 0.0;
  double theta_nc = 0.0;  // equals theta_c under the shared policy
  double p_c = 0.0;
  double p_nc = 0.0;
  double residual = 0.0;  // |m_c P_c + m_nc P_nc - n|
  Policy policy = Policy::SharedThreshold;
  std::size_t iterations = 0;
  // DP only: a zero-mean group cannot reach P = n/m; its threshold is the
  // support minimum while P = n/m still drives the update.
  bool unreachable_c = false;
  bool unreachable_nc = false;
};

/// Relative tolerance on the expected acceptance count.
inline constexpr double kThresholdTolerance = 1e-9;
inline constexpr std::size_t kThresholdMaxIterations = 200;

/// Expected number of accepted individuals at a common threshold.
inline double expected_acceptances(const Scenario& s, const GroupState& x, double theta) {
  const auto& d = s.distribution();
  return static_cast<double>(s.m_c()) * tail_probability(d, x.mu_c, theta) +
         static_cast<double>(s.m_nc()) * tail_probability(d, x.mu_nc, theta);
}

namespace detail {

inline ThresholdSolution finish_shared(const Scenario& s, const GroupState& x, double theta, std::size_t iters) {
  ThresholdSolution out;
  out.policy = Policy::SharedThreshold;
  out.theta_c = out.theta_nc = theta;
  out.p_c = tail_probability(s.distribution(), x.mu_c, theta);
  out.p_nc = tail_probability(s.distribution(), x.mu_nc, theta);
  out.residual = std::fabs(static_cast<double>(s.m_c()) * out.p_c + static_cast<double>(s.m_nc()) * out.p_nc -
                           static_cast<double>(s.n()));
  out.iterations = iters;
  return out;
}

// Lowest threshold at which every individual is accepted.
inline double lower_bracket(const Scenario& s, const GroupState& x) {
  const auto& d = s.distribution();
  if (d.family == Family::Gaussian) return std::min(x.mu_c, x.mu_nc) - 12.0 * d.sigma;
  double lo = std::min(support_min(d, x.mu_c), support_min(d, x.mu_nc));
  return std::max(lo, 0.0);
}

}  // namespace detail

/// Common threshold theta with m_c P_c(theta) + m_nc P_nc(theta) = n.
///
/// The expected count is non-increasing in theta, so the root is bracketed
/// between the point where everyone is accepted and an upper end found by
/// doubling, then refined by find_bracketed_root until |T - n| <= 1e-9 n.
inline ThresholdSolution solve_shared_threshold(const Scenario& s, const GroupState& x) {
  validate(x);
  const auto& d = s.distribution();
  const double n = static_cast<double>(s.n());
  if (is_degenerate(d, x.mu_c) && is_degenerate(d, x.mu_nc))
    throw SolverError("shared threshold: both group means are zero");

  if (x.mu_c == x.mu_nc) return detail::finish_shared(s, x, inverse_tail(d, x.mu_c, s.base_rate()), 0);

  auto excess = [&](double theta) { return expected_acceptances(s, x, theta) - n; };

  const double lo = detail::lower_bracket(s, x);
  double width = std::max({x.mu_c, x.mu_nc, d.family == Family::Gaussian ? d.sigma : 0.0});
  double hi = lo + width;
  int doublings = 0;
  while (excess(hi) >= 0.0) {
    if (++doublings > 2000 || !std::isfinite(hi))
      throw SolverError("shared threshold: could not bracket the root from above");
    width *= 2.0;
    hi = lo + width;
  }

  // Aim well below the contract tolerance so theta itself is accurate on
  // flat tails, then accept the best iterate if it meets the contract.
  const double ftol = kThresholdTolerance * n;
  RootResult r = find_bracketed_root(excess, lo, hi, ftol * 1e-6, kThresholdMaxIterations);
  if (std::fabs(r.fx) <= ftol) r.converged = true;
  if (!r.converged) {
    std::ostringstream msg;
    msg.precision(17);
    msg << "shared threshold did not converge after " << r.iterations << " iterations; last bracket [" << r.lo
        << ", " << r.hi << "], residual " << std::fabs(r.fx);
    throw SolverError(msg.str());
  }
  return detail::finish_shared(s, x, r.x, r.iterations);
}

/// Group-specific thresholds that give both groups the acceptance rate n/m.
inline ThresholdSolution dp_thresholds(const Scenario& s, const GroupState& x) {
  validate(x);
  const auto& d = s.distribution();
  const double rate = s.base_rate();
  ThresholdSolution out;
  out.policy = Policy::DemographicParity;
  out.p_c = out.p_nc = rate;
  auto threshold_for = [&](double mean, bool& unreachable) {
    if (is_degenerate(d, mean)) {
      unreachable = true;
      return support_min(d, mean);
    }
    return inverse_tail(d, mean, rate);
  };
  out.theta_c = threshold_for(x.mu_c, out.unreachable_c);
  out.theta_nc = threshold_for(x.mu_nc, out.unreachable_nc);
  out.residual = std::fabs(static_cast<double>(s.m_c()) * rate + static_cast<double>(s.m_nc()) * rate -
                           static_cast<double>(s.n()));
  return out;
}

/// Dispatches on the scenario's policy.
inline ThresholdSolution solve_thresholds(const Scenario& s, const GroupState& x) {
  return s.policy() == Policy::SharedThreshold ? solve_shared_threshold(s, x) : dp_thresholds(s, x);
}

struct ParetoClosedForm {
  double theta = 0.0;
  double p_c = 0.0;
  double p_nc = 0.0;
  // The closed form assumes theta lies above both support minima, which is
  // the same as both probabilities staying <= 1.
  bool valid = false;
};

/// Closed-form shared threshold and acceptance probabilities for Pareto scores:
///   theta = (k-1)/k * ((m_c mu_c^k + m_nc mu_nc^k) / n)^(1/k)
///   P_g   = n mu_g^k / (m_c mu_c^k + m_nc mu_nc^k)
/// Powers are taken relative to the larger mean to stay finite.
inline ParetoClosedForm pareto_closed_form(const Scenario& s, const GroupState& x) {
  validate(x);
  const auto& d = s.distribution();
  if (d.family != Family::Pareto) throw std::domain_error("pareto_closed_form: scenario is not Pareto");
  const double top = std::max(x.mu_c, x.mu_nc);
  if (top <= 0.0) throw SolverError("pareto_closed_form: both group means are zero");
  const double k = d.k;
  const double n = static_cast<double>(s.n());
  const double w_c = is_degenerate(d, x.mu_c) ? 0.0 : std::pow(x.mu_c / top, k);
  const double w_nc = is_degenerate(d, x.mu_nc) ? 0.0 : std::pow(x.mu_nc / top, k);
  const double mass = static_cast<double>(s.m_c()) * w_c + static_cast<double>(s.m_nc()) * w_nc;

  ParetoClosedForm out;
  out.theta = (k - 1.0) / k * top * std::pow(mass / n, 1.0 / k);
  out.p_c = n * w_c / mass;
  out.p_nc = n * w_nc / mass;
  out.valid = out.p_c <= 1.0 && out.p_nc <= 1.0;
  return out;
}

inline double pareto_closed_form_threshold(const Scenario& s, const GroupState& x) {
  return pareto_closed_form(s, x).theta;
}

}  // namespace fairdyn
