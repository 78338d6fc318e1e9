#pragma once

#include <charconv>
#include <cmath>
#include <ostream>
#include <string>
#include <vector>

#include <json.hpp>

#include "fairdyn/analysis.hpp"
#include "fairdyn/dynamics.hpp"
#include "fairdyn/montecarlo.hpp"

namespace fairdyn {

/// Shortest decimal string that parses back to the same double.
inline std::string format_number(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

inline constexpr const char* kTrajectoryHeader = "t,mu_c,mu_nc,theta_c,theta_nc,P_c,P_nc,eta";
inline constexpr const char* kPhaseHeader = "mu_c,mu_nc,u,v,flag";
inline constexpr const char* kBasinHeader = "mu_c,mu_nc,attractor,steps";
inline constexpr const char* kTrialsHeader = "trial,accepted_c,accepted_nc,accuracy,dp_gap";
inline constexpr const char* kThresholdHeader = "theta_c,theta_nc,P_c,P_nc,residual";
inline constexpr const char* kEquilibriaHeader = "label,mu_c,mu_nc,residual,verified";

inline void write_trajectory_csv(std::ostream& os, const Trajectory& tr) {
  os << kTrajectoryHeader << '\n';
  for (const auto& r : tr.records) {
    os << r.t << ',' << format_number(r.state.mu_c) << ',' << format_number(r.state.mu_nc) << ','
       << format_number(r.theta_c) << ',' << format_number(r.theta_nc) << ',' << format_number(r.p_c) << ','
       << format_number(r.p_nc) << ',' << format_number(r.eta) << '\n';
  }
}

inline void write_phase_csv(std::ostream& os, const std::vector<PhaseRow>& rows) {
  os << kPhaseHeader << '\n';
  for (const auto& r : rows) {
    os << format_number(r.mu_c) << ',' << format_number(r.mu_nc) << ',' << format_number(r.u) << ','
       << format_number(r.v) << ',' << (r.ok ? "ok" : "unsolved") << '\n';
  }
}

/// Attractor column: index into the equilibria listing, or "none".
inline void write_basin_csv(std::ostream& os, const BasinMap& map) {
  os << kBasinHeader << '\n';
  for (const auto& c : map.cells) {
    os << format_number(c.start.mu_c) << ',' << format_number(c.start.mu_nc) << ',';
    if (c.attractor < 0) os << "none";
    else os << c.attractor;
    os << ',' << c.steps << '\n';
  }
}

inline void write_trials_csv(std::ostream& os, const std::vector<TrialOutcome>& outcomes) {
  os << kTrialsHeader << '\n';
  for (std::size_t i = 0; i < outcomes.size(); ++i) {
    const auto& o = outcomes[i];
    os << i << ',' << o.accepted_c << ',' << o.accepted_nc << ',' << format_number(o.accuracy) << ','
       << format_number(o.dp_gap) << '\n';
  }
}

inline void write_threshold_csv(std::ostream& os, const ThresholdSolution& s) {
  os << kThresholdHeader << '\n'
     << format_number(s.theta_c) << ',' << format_number(s.theta_nc) << ',' << format_number(s.p_c) << ','
     << format_number(s.p_nc) << ',' << format_number(s.residual) << '\n';
}

inline void write_equilibria_csv(std::ostream& os, const std::vector<Equilibrium>& eqs) {
  os << kEquilibriaHeader << '\n';
  for (const auto& e : eqs) {
    os << to_string(e.kind) << ',' << format_number(e.point.mu_c) << ',' << format_number(e.point.mu_nc) << ','
       << format_number(e.residual) << ',' << (e.verified ? "true" : "false") << '\n';
  }
}

inline nlohmann::json to_json(const Matrix2& m) {
  return nlohmann::json::array({nlohmann::json::array({m(0, 0), m(0, 1)}), nlohmann::json::array({m(1, 0), m(1, 1)})});
}

inline nlohmann::json to_json(const JacobianAssessment& a) {
  nlohmann::json ev = nlohmann::json::array();
  for (const auto& l : a.eigenvalues) ev.push_back({{"re", l.real()}, {"im", l.imag()}, {"abs", std::abs(l)}});
  return {{"matrix", to_json(a.matrix)}, {"eigenvalues", ev}, {"verdict", std::string(to_string(a.verdict))}};
}

inline nlohmann::json to_json(const Equilibrium& e) {
  return {{"label", std::string(to_string(e.kind))},
          {"source", std::string(to_string(e.source))},
          {"mu_c", e.point.mu_c},
          {"mu_nc", e.point.mu_nc},
          {"residual", e.residual},
          {"verified", e.verified}};
}

inline nlohmann::json to_json(const InstabilityCondition& c) {
  nlohmann::json preds = nlohmann::json::array();
  for (const auto& p : c.predicates) preds.push_back({{"name", p.name}, {"holds", p.holds}, {"margin", p.margin}});
  return {{"family", std::string(to_string(c.family))},
          {"holds", c.holds},
          {"margin", c.margin},
          {"predicates", preds},
          {"jacobian_radius", c.jacobian_radius},
          {"jacobian_unstable", c.jacobian_unstable}};
}

inline nlohmann::json to_json(const StabilityReport& r) {
  nlohmann::json j = {{"equilibrium", to_json(r.equilibrium)},
                      {"jacobian_fd_full", to_json(r.fd_full)},
                      {"jacobian_fd_theta_frozen", to_json(r.fd_frozen)}};
  if (r.analytic) {
    j["jacobian_analytic"] = to_json(*r.analytic_assessment);
    j["jacobian_analytic"]["mode"] = std::string(to_string(r.analytic->mode));
    j["jacobian_analytic"]["approximate"] = r.analytic->approximate;
  } else {
    j["jacobian_analytic"] = nullptr;
  }
  j["criterion"] = r.criterion ? to_json(*r.criterion) : nlohmann::json(nullptr);
  j["notes"] = r.notes;
  return j;
}

inline nlohmann::json to_json(const MonteCarloSummary& s) {
  return {{"trials", s.trials},
          {"seed", s.seed},
          {"accepted_c", {{"mean", s.mean_accepted_c}, {"variance", s.var_accepted_c}, {"expected", s.expected_c},
                          {"P", s.p_c}, {"z", s.z_c}}},
          {"accepted_nc", {{"mean", s.mean_accepted_nc}, {"variance", s.var_accepted_nc},
                           {"expected", s.expected_nc}, {"P", s.p_nc}, {"z", s.z_nc}}},
          {"accuracy", {{"mean", s.mean_accuracy}, {"min", s.min_accuracy}}},
          {"dp_gap", {{"mean", s.mean_dp_gap}}}};
}

}  // namespace fairdyn
