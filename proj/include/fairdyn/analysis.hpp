#pragma once

#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <numbers>
#include <optional>
#include <string>
#include <vector>

#include "fairdyn/dynamics.hpp"
#include "fairdyn/matrix2.hpp"
#include "fairdyn/normal.hpp"
#include "fairdyn/parallel.hpp"

namespace fairdyn {

// ---------------------------------------------------------------------------
// Equilibria

enum class EquilibriumKind {
  UndesirableProtectedZero,     // (0, beta/alpha * n/m_nc)
  UndesirableNonprotectedZero,  // (beta/alpha * n/m_c, 0)
  Desirable,                    // beta/alpha * n/m on the diagonal, shared policy
  DPUnique,                     // same point, demographic parity
};

inline std::string_view to_string(EquilibriumKind k) {
  switch (k) {
    case EquilibriumKind::UndesirableProtectedZero: return "undesirable_protected_zero";
    case EquilibriumKind::UndesirableNonprotectedZero: return "undesirable_nonprotected_zero";
    case EquilibriumKind::Desirable: return "desirable";
    case EquilibriumKind::DPUnique: return "dp_unique";
  }
  return "?";
}

enum class EquilibriumSource { Analytic, Refined };

inline std::string_view to_string(EquilibriumSource s) {
  return s == EquilibriumSource::Analytic ? "analytic" : "refined";
}

struct Equilibrium {
  GroupState point;
  EquilibriumKind kind = EquilibriumKind::Desirable;
  EquilibriumSource source = EquilibriumSource::Analytic;
  double residual = 0.0;  // max-norm |step(point) - point|
  bool verified = false;  // residual < kEquilibriumTolerance
};

inline constexpr double kEquilibriumTolerance = 1e-8;

namespace detail {
inline Equilibrium checked_equilibrium(const Scenario& s, GroupState p, EquilibriumKind kind, EquilibriumSource src) {
  Equilibrium e{p, kind, src, std::numeric_limits<double>::infinity(), false};
  try {
    e.residual = step_residual(s, p);
  } catch (const Error&) {
  }
  e.verified = e.residual < kEquilibriumTolerance;
  return e;
}
}  // namespace detail

/// The closed-form fixed points of the map. Under a shared threshold these
/// are the two axis points, where one group gets no acceptances, and the
/// diagonal point with equal rates n/m; under demographic parity only the
/// diagonal point. Each is checked with one step. For the Gaussian the
/// axis points are fixed only in the small-sigma limit, so `verified` may
/// come back false there.
inline std::vector<Equilibrium> analytic_equilibria(const Scenario& s) {
  if (!(s.alpha() > 0.0))
    throw SolverError("no equilibria: with alpha = 0 and beta > 0 the means never stop growing");
  const double gain = s.beta() / s.alpha();
  const double n = static_cast<double>(s.n());
  const double diag = gain * s.base_rate();
  std::vector<Equilibrium> out;
  if (s.policy() == Policy::SharedThreshold) {
    out.push_back(detail::checked_equilibrium(s, {0.0, gain * n / static_cast<double>(s.m_nc())},
                                              EquilibriumKind::UndesirableProtectedZero, EquilibriumSource::Analytic));
    out.push_back(detail::checked_equilibrium(s, {gain * n / static_cast<double>(s.m_c()), 0.0},
                                              EquilibriumKind::UndesirableNonprotectedZero,
                                              EquilibriumSource::Analytic));
    out.push_back(
        detail::checked_equilibrium(s, {diag, diag}, EquilibriumKind::Desirable, EquilibriumSource::Analytic));
  } else {
    out.push_back(
        detail::checked_equilibrium(s, {diag, diag}, EquilibriumKind::DPUnique, EquilibriumSource::Analytic));
  }
  return out;
}

/// Index of the equilibrium closest to x in max-norm, or -1 for an empty list.
inline int nearest_equilibrium(const std::vector<Equilibrium>& eqs, const GroupState& x) {
  int best = -1;
  double dist = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < eqs.size(); ++i) {
    const double d = max_norm(eqs[i].point, x);
    if (d < dist) dist = d, best = static_cast<int>(i);
  }
  return best;
}

/// Refinement that ran out of iterations.
class ConvergenceError : public SolverError {
 public:
  ConvergenceError(const std::string& what, GroupState last, double residual)
      : SolverError(what), last_(last), residual_(residual) {}
  const GroupState& last_iterate() const noexcept { return last_; }
  double residual() const noexcept { return residual_; }

 private:
  GroupState last_;
  double residual_;
};

/// Damped fixed-point iteration x <- x + gamma (step(x) - x). gamma starts
/// at 1, halves (down to 1/16) whenever the residual grows and recovers by
/// 1.25x when it shrinks. The result is labeled by the nearest analytic
/// equilibrium. Real eigenvalues above one stay above one under damping,
/// so a guess near such a point drifts away instead of settling.
inline Equilibrium refine_equilibrium(const Scenario& s, const GroupState& guess, double tol,
                                      std::size_t max_iter = 10000) {
  if (!(tol > 0.0)) throw std::domain_error("refine_equilibrium: tol must be > 0");
  const auto analytic = analytic_equilibria(s);
  GroupState x = guess;
  double gamma = 1.0;
  double prev = std::numeric_limits<double>::infinity();
  for (std::size_t it = 0; it <= max_iter; ++it) {
    const GroupState fx = step(s, x);
    const double res = max_norm(fx, x);
    if (res < tol) {
      const int idx = nearest_equilibrium(analytic, x);
      Equilibrium e{x, analytic[static_cast<std::size_t>(idx)].kind, EquilibriumSource::Refined, res, false};
      e.verified = res < kEquilibriumTolerance;
      return e;
    }
    if (it == max_iter) break;
    gamma = res > prev ? std::max(gamma * 0.5, 1.0 / 16.0) : std::min(1.0, gamma * 1.25);
    prev = res;
    x.mu_c = std::max(0.0, x.mu_c + gamma * (fx.mu_c - x.mu_c));
    x.mu_nc = std::max(0.0, x.mu_nc + gamma * (fx.mu_nc - x.mu_nc));
  }
  throw ConvergenceError("refine_equilibrium: no convergence in " + std::to_string(max_iter) + " iterations", x,
                         step_residual(s, x));
}

// ---------------------------------------------------------------------------
// Jacobians

/// Full re-solves the threshold at each perturbed state. ThetaFrozen keeps
/// the thresholds from the base state and only re-evaluates the tails (under
/// demographic parity it keeps P = n/m, so both modes agree).
enum class JacobianMode { Full, ThetaFrozen };

inline std::string_view to_string(JacobianMode m) { return m == JacobianMode::Full ? "full" : "theta_frozen"; }

inline double default_fd_step(double mu) { return std::max(1e-6, 1e-6 * std::fabs(mu)); }

/// Finite-difference Jacobian of the step map at x. Central differences,
/// except one-sided forward differences where x - h would leave mu >= 0.
/// h <= 0 selects default_fd_step per coordinate.
inline Matrix2 fd_jacobian(const Scenario& s, const GroupState& x, JacobianMode mode, double h = 0.0) {
  validate(x);
  std::function<GroupState(const GroupState&)> map;
  if (mode == JacobianMode::Full) {
    map = [&s](const GroupState& y) { return step(s, y); };
  } else {
    const ThresholdSolution base = solve_thresholds(s, x);
    const auto& d = s.distribution();
    const double keep = 1.0 - s.alpha();
    const double beta = s.beta();
    if (s.policy() == Policy::DemographicParity) {
      map = [=](const GroupState& y) {
        return GroupState{keep * y.mu_c + beta * base.p_c, keep * y.mu_nc + beta * base.p_nc};
      };
    } else {
      map = [=](const GroupState& y) {
        return GroupState{keep * y.mu_c + beta * tail_probability(d, y.mu_c, base.theta_c),
                          keep * y.mu_nc + beta * tail_probability(d, y.mu_nc, base.theta_nc)};
      };
    }
  }

  Matrix2 J;
  for (int j = 0; j < 2; ++j) {
    const double xj = j == 0 ? x.mu_c : x.mu_nc;
    const double hj = h > 0.0 ? h : default_fd_step(xj);
    auto shifted = [&](double delta) {
      GroupState y = x;
      (j == 0 ? y.mu_c : y.mu_nc) += delta;
      return map(y);
    };
    GroupState up = shifted(hj), down;
    double span;
    if (xj - hj >= 0.0) {
      down = shifted(-hj);
      span = 2.0 * hj;
    } else {
      down = map(x);
      span = hj;
    }
    J(0, j) = (up.mu_c - down.mu_c) / span;
    J(1, j) = (up.mu_nc - down.mu_nc) / span;
  }
  return J;
}

struct AnalyticJacobian {
  Matrix2 matrix;
  JacobianMode mode = JacobianMode::ThetaFrozen;  // which finite-difference mode it describes
  bool approximate = false;                       // holds only in a limit (axis points)
};

/// Closed-form Jacobians at the analytic equilibria.
///
///  - demographic parity: (1 - alpha) I for every family.
///  - axis points: (1 - alpha) I for the full map, valid while the losing
///    group's acceptance probability is insensitive to small changes, so
///    the winner keeps P = n/m_g (flagged approximate).
///  - desirable point, exponential: (1 - alpha - alpha ln(n/m)) I, theta frozen.
///  - desirable point, Gaussian: (1 - alpha + beta/sigma phi(Phi^-1(1 - n/m))) I,
///    theta frozen. A higher mean raises the tail mass above a fixed
///    theta, so the density term enters with a plus sign.
///  - desirable point, Pareto: derivative of the closed-form probabilities,
///    which already re-solve theta, so this one describes the full map:
///      [[1 - alpha + alpha k m_nc/m, -alpha k m_nc/m],
///       [-alpha k m_c/m,             1 - alpha + alpha k m_c/m]]
inline std::optional<AnalyticJacobian> analytic_jacobian(const Scenario& s, const Equilibrium& e) {
  const double alpha = s.alpha();
  const double decay = 1.0 - alpha;
  switch (e.kind) {
    case EquilibriumKind::DPUnique:
      return AnalyticJacobian{Matrix2::diag(decay, decay), JacobianMode::ThetaFrozen, false};
    case EquilibriumKind::UndesirableProtectedZero:
    case EquilibriumKind::UndesirableNonprotectedZero:
      return AnalyticJacobian{Matrix2::diag(decay, decay), JacobianMode::Full, true};
    case EquilibriumKind::Desirable: break;
  }
  const auto& d = s.distribution();
  const double rate = s.base_rate();
  switch (d.family) {
    case Family::Exponential: {
      const double lambda = decay - alpha * std::log(rate);
      return AnalyticJacobian{Matrix2::diag(lambda, lambda), JacobianMode::ThetaFrozen, false};
    }
    case Family::Gaussian: {
      const double lambda = decay + s.beta() / d.sigma * std_normal_pdf(std_normal_quantile(1.0 - rate));
      return AnalyticJacobian{Matrix2::diag(lambda, lambda), JacobianMode::ThetaFrozen, false};
    }
    case Family::Pareto: {
      const double m = static_cast<double>(s.m());
      const double share_c = static_cast<double>(s.m_c()) / m;
      const double share_nc = static_cast<double>(s.m_nc()) / m;
      const double ak = alpha * d.k;
      return AnalyticJacobian{Matrix2{{decay + ak * share_nc, -ak * share_nc, -ak * share_c, decay + ak * share_c}},
                              JacobianMode::Full, false};
    }
  }
  return std::nullopt;
}

// ---------------------------------------------------------------------------
// Closed-form instability predicates for the desirable shared-policy point

struct Predicate {
  std::string name;
  bool holds = false;
  double margin = 0.0;  // > 0 on the unstable side of the boundary
};

struct InstabilityCondition {
  Family family = Family::Exponential;
  std::vector<Predicate> predicates;
  bool holds = false;    // any predicate holds
  double margin = 0.0;   // largest predicate margin
  // Spectral radius of analytic_jacobian at the desirable point and whether
  // it exceeds 1 + kClassifyTolerance. For the exponential this always
  // agrees with `holds`; the Pareto and Gaussian predicates assume a
  // decreasing response to the mean and can disagree.
  double jacobian_radius = 0.0;
  bool jacobian_unstable = false;
};

inline std::optional<AnalyticJacobian> analytic_jacobian(const Scenario& s, const Equilibrium& e);

/// Closed-form instability predicates for the desirable shared-threshold point:
///   exponential: n/m < 1/e
///   Pareto:      k > m / (sqrt(m_c m_nc) - 1)  or  k > (2/alpha - 1) m / (sqrt(m_c m_nc) + 1)
///   Gaussian:    sigma < beta / (2 - alpha) * phi(Phi^-1(1 - n/m))
/// alongside the verdict of the analytic Jacobian itself.
inline InstabilityCondition instability_condition(const Scenario& s) {
  InstabilityCondition out;
  const auto& d = s.distribution();
  out.family = d.family;
  const double rate = s.base_rate();
  switch (d.family) {
    case Family::Exponential: {
      const double bound = 1.0 / std::numbers::e;
      out.predicates.push_back({"n/m < 1/e", rate < bound, bound - rate});
      break;
    }
    case Family::Pareto: {
      const double m = static_cast<double>(s.m());
      const double root = std::sqrt(static_cast<double>(s.m_c()) * static_cast<double>(s.m_nc()));
      const double inf = std::numeric_limits<double>::infinity();
      const double bound1 = root > 1.0 ? m / (root - 1.0) : inf;
      const double bound2 = s.alpha() > 0.0 ? (2.0 / s.alpha() - 1.0) * m / (root + 1.0) : inf;
      out.predicates.push_back({"k > m/(sqrt(m_c m_nc) - 1)", d.k > bound1, d.k - bound1});
      out.predicates.push_back({"k > (2/alpha - 1) m/(sqrt(m_c m_nc) + 1)", d.k > bound2, d.k - bound2});
      break;
    }
    case Family::Gaussian: {
      const double bound = s.beta() / (2.0 - s.alpha()) * std_normal_pdf(std_normal_quantile(1.0 - rate));
      out.predicates.push_back({"sigma < beta/(2 - alpha) phi(Phi^-1(1 - n/m))", d.sigma < bound, bound - d.sigma});
      break;
    }
  }
  out.margin = -std::numeric_limits<double>::infinity();
  for (const auto& p : out.predicates) {
    out.holds = out.holds || p.holds;
    out.margin = std::max(out.margin, p.margin);
  }
  if (s.alpha() > 0.0) {
    const double diag = s.beta() / s.alpha() * rate;
    const Equilibrium desirable{{diag, diag}, EquilibriumKind::Desirable, EquilibriumSource::Analytic, 0.0, true};
    const Eigenvalues ev = eigen2(analytic_jacobian(s.with_policy(Policy::SharedThreshold), desirable)->matrix);
    out.jacobian_radius = spectral_radius(ev);
    out.jacobian_unstable = classify(ev) == Stability::Unstable;
  }
  return out;
}

/// Right-hand side of the Gaussian sigma predicate.
inline double gaussian_sigma_bound(const Scenario& s) {
  return s.beta() / (2.0 - s.alpha()) * std_normal_pdf(std_normal_quantile(1.0 - s.base_rate()));
}

// ---------------------------------------------------------------------------
// Stability report

struct JacobianAssessment {
  Matrix2 matrix;
  Eigenvalues eigenvalues{};
  Stability verdict = Stability::Marginal;
};

inline JacobianAssessment assess(const Matrix2& m) {
  JacobianAssessment a{m, eigen2(m), Stability::Marginal};
  a.verdict = classify(a.eigenvalues);
  return a;
}

struct StabilityReport {
  Equilibrium equilibrium;
  JacobianAssessment fd_full;    // verdict for the coupled map
  JacobianAssessment fd_frozen;  // comparable with the closed forms
  std::optional<AnalyticJacobian> analytic;
  std::optional<JacobianAssessment> analytic_assessment;
  std::optional<InstabilityCondition> criterion;  // desirable shared point only
  std::vector<std::string> notes;
};

inline StabilityReport stability_report(const Scenario& s, const Equilibrium& e) {
  StabilityReport r;
  r.equilibrium = e;
  r.fd_full = assess(fd_jacobian(s, e.point, JacobianMode::Full));
  r.fd_frozen = assess(fd_jacobian(s, e.point, JacobianMode::ThetaFrozen));
  r.analytic = analytic_jacobian(s, e);
  if (r.analytic) r.analytic_assessment = assess(r.analytic->matrix);
  if (e.kind == EquilibriumKind::Desirable) {
    r.criterion = instability_condition(s);
    if (s.distribution().family == Family::Pareto)
      r.notes.push_back("pareto: analytic eigenvalues are the two distinct roots of the coupled matrix");
    if (r.criterion->holds != r.criterion->jacobian_unstable)
      r.notes.push_back("closed-form predicate disagrees with the analytic jacobian verdict");
  }
  if (r.analytic && r.analytic->approximate)
    r.notes.push_back("analytic jacobian assumes the losing group's acceptance probability is locally constant");
  if (!e.verified) r.notes.push_back("equilibrium not verified: step residual above 1e-8");
  if (s.capacity_warning()) r.notes.push_back("n >= m_c/5: expected-count approximation is coarse");
  if (s.heavy_tail_warning()) r.notes.push_back("pareto k <= 2: infinite variance");
  return r;
}

// ---------------------------------------------------------------------------
// Grids: basin map and phase field

struct GridSpec {
  double mu_max = 5.0;
  std::size_t resolution = 21;  // points per axis, endpoints included
};

inline void validate(const GridSpec& g) {
  if (g.resolution < 2) throw std::domain_error("grid resolution must be >= 2");
  if (!(g.mu_max > 0.0) || !std::isfinite(g.mu_max)) throw std::domain_error("grid mu_max must be > 0");
}

/// Grid point for flat index i; mu_c is the slow index, mu_nc the fast one.
inline GroupState grid_point(const GridSpec& g, std::size_t i) {
  const double step = g.mu_max / static_cast<double>(g.resolution - 1);
  return {step * static_cast<double>(i / g.resolution), step * static_cast<double>(i % g.resolution)};
}

struct BasinCell {
  GroupState start;
  int attractor = -1;  // index into BasinMap::attractors, -1 for none
  std::size_t steps = 0;
};

struct BasinMap {
  GridSpec grid;
  std::vector<Equilibrium> attractors;
  std::vector<BasinCell> cells;
};

/// Simulates from every grid point and labels the cell with the analytic
/// equilibrium its converged endpoint lies within tol of (max-norm).
/// Unconverged, divergent or unsolvable cells are labeled none.
inline BasinMap basin_map(const Scenario& s, const GridSpec& grid, std::size_t max_steps, double tol,
                          unsigned workers = 0) {
  validate(grid);
  BasinMap out;
  out.grid = grid;
  try {
    out.attractors = analytic_equilibria(s);
  } catch (const SolverError&) {
  }
  out.cells.resize(grid.resolution * grid.resolution);
  parallel_for(out.cells.size(), workers, [&](std::size_t i) {
    BasinCell cell;
    cell.start = grid_point(grid, i);
    try {
      const Trajectory tr = simulate(s, cell.start, {max_steps, tol});
      cell.steps = tr.records.size() - 1;
      if (tr.converged) {
        const int idx = nearest_equilibrium(out.attractors, tr.final_state());
        if (idx >= 0 && max_norm(out.attractors[static_cast<std::size_t>(idx)].point, tr.final_state()) < tol)
          cell.attractor = idx;
      }
    } catch (const std::exception&) {
      cell.attractor = -1;
    }
    out.cells[i] = cell;
  });
  return out;
}

struct PhaseRow {
  double mu_c = 0.0;
  double mu_nc = 0.0;
  double u = 0.0;  // step(x) - x
  double v = 0.0;
  bool ok = true;
};

/// One-step displacement at every grid point; unsolvable points give (0, 0)
/// with ok = false.
inline std::vector<PhaseRow> phase_field(const Scenario& s, const GridSpec& grid, unsigned workers = 0) {
  validate(grid);
  std::vector<PhaseRow> rows(grid.resolution * grid.resolution);
  parallel_for(rows.size(), workers, [&](std::size_t i) {
    const GroupState x = grid_point(grid, i);
    PhaseRow row{x.mu_c, x.mu_nc, 0.0, 0.0, true};
    try {
      const GroupState y = step(s, x);
      row.u = y.mu_c - x.mu_c;
      row.v = y.mu_nc - x.mu_nc;
    } catch (const std::exception&) {
      row.ok = false;
    }
    rows[i] = row;
  });
  return rows;
}

/// Grid extent used by the CLI: 1.05 times the largest equilibrium coordinate.
inline double default_grid_extent(const Scenario& s) {
  double top = 0.0;
  for (const auto& e : analytic_equilibria(s)) top = std::max({top, e.point.mu_c, e.point.mu_nc});
  return 1.05 * top;
}

}  // namespace fairdyn
