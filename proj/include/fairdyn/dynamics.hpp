#pragma once

#include <cmath>
#include <cstddef>
#include <optional>
#include <vector>

#include "fairdyn/threshold.hpp"

namespace fairdyn {

struct StepResult {
  GroupState next;
  ThresholdSolution solution;  // thresholds at the input state
};

/// One update of the mean-score map:
///   mu_g' = (1 - alpha) mu_g + beta P_g
/// with P_g from the policy's threshold rule at the current state.
inline StepResult advance(const Scenario& s, const GroupState& x) {
  StepResult r;
  r.solution = solve_thresholds(s, x);
  const double keep = 1.0 - s.alpha();
  r.next.mu_c = keep * x.mu_c + s.beta() * r.solution.p_c;
  r.next.mu_nc = keep * x.mu_nc + s.beta() * r.solution.p_nc;
  return r;
}

inline GroupState step(const Scenario& s, const GroupState& x) { return advance(s, x).next; }

/// max-norm |step(x) - x|.
inline double step_residual(const Scenario& s, const GroupState& x) { return max_norm(step(s, x), x); }

struct TrajectoryRecord {
  std::size_t t = 0;
  GroupState state;
  double theta_c = 0.0;
  double theta_nc = 0.0;
  double p_c = 0.0;
  double p_nc = 0.0;
  double eta = 0.0;  // mu_nc - mu_c
};

struct Trajectory {
  std::vector<TrajectoryRecord> records;
  bool converged = false;
  std::optional<std::size_t> converged_at;
  bool diverged = false;

  const GroupState& final_state() const { return records.back().state; }
};

struct SimulationOptions {
  std::size_t max_steps = 1000;
  double tol = 1e-9;
};

/// Means above this abort a simulation as divergent.
inline constexpr double kDivergenceBound = 1e12;

namespace detail {
inline TrajectoryRecord make_record(std::size_t t, const GroupState& x, const ThresholdSolution& sol) {
  return {t, x, sol.theta_c, sol.theta_nc, sol.p_c, sol.p_nc, x.gap()};
}
}  // namespace detail

/// Iterates the map from x0. Record t holds state t and the thresholds
/// solved at it, so record t+1's state is step(record t's state). Stops
/// once a step moves the state by less than tol in max-norm; converged_at
/// is the index of the first state reached by such a step.
inline Trajectory simulate(const Scenario& s, const GroupState& x0, const SimulationOptions& opt = {}) {
  if (opt.max_steps < 1) throw std::domain_error("simulate: max_steps must be >= 1");
  if (!(opt.tol > 0.0)) throw std::domain_error("simulate: tol must be > 0");
  validate(x0);

  Trajectory traj;
  traj.records.reserve(std::min<std::size_t>(opt.max_steps + 1, 4096));
  GroupState x = x0;
  for (std::size_t t = 0; t < opt.max_steps; ++t) {
    const StepResult r = advance(s, x);
    traj.records.push_back(detail::make_record(t, x, r.solution));
    const double moved = max_norm(r.next, x);
    x = r.next;
    if (moved < opt.tol) {
      traj.converged = true;
      traj.converged_at = t + 1;
      break;
    }
    if (x.mu_c > kDivergenceBound || x.mu_nc > kDivergenceBound) {
      traj.diverged = true;
      break;
    }
  }
  traj.records.push_back(detail::make_record(traj.records.size(), x, solve_thresholds(s, x)));
  return traj;
}

enum class GapTrend { Grows, Shrinks, Stationary };

inline std::string_view to_string(GapTrend g) {
  switch (g) {
    case GapTrend::Grows: return "grows";
    case GapTrend::Shrinks: return "shrinks";
    case GapTrend::Stationary: return "stationary";
  }
  return "?";
}

/// Values within this band of zero count as no change in the gap.
inline constexpr double kGapDeadBand = 1e-12;

inline GapTrend classify_gap_change(double change) {
  if (change > kGapDeadBand) return GapTrend::Grows;
  if (change < -kGapDeadBand) return GapTrend::Shrinks;
  return GapTrend::Stationary;
}

struct GapDrift {
  double value = 0.0;  // beta (P_nc - P_c) - alpha eta, equal to eta' - eta
  GapTrend verdict = GapTrend::Stationary;
};

/// Predicts whether the score gap eta = mu_nc - mu_c widens over the next step.
inline GapDrift gap_drift(const Scenario& s, const GroupState& x) {
  const ThresholdSolution sol = solve_thresholds(s, x);
  GapDrift g;
  g.value = s.beta() * (sol.p_nc - sol.p_c) - s.alpha() * x.gap();
  g.verdict = classify_gap_change(g.value);
  return g;
}

}  // namespace fairdyn
