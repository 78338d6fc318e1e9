#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <random>
#include <vector>

#include "fairdyn/distributions.hpp"
#include "fairdyn/parallel.hpp"
#include "fairdyn/threshold.hpp"

namespace fairdyn {

/// SplitMix64 finalizer; used to derive independent per-trial seeds.
constexpr std::uint64_t mix64(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

constexpr std::uint64_t trial_seed(std::uint64_t master, std::uint64_t trial) {
  return mix64(mix64(master) ^ mix64(trial ^ 0xd1b54a32d192ed03ULL));
}

/// Uniform double in the open interval (0, 1) from the top 53 bits.
inline double uniform_open(std::mt19937_64& rng) {
  return (static_cast<double>(rng() >> 11) + 0.5) * 0x1.0p-53;
}

struct Individual {
  bool protected_group = false;
  double score = 0.0;
};

/// Inverse-transform draw of one score.
inline double sample_score(const DistributionSpec& d, double mean, std::mt19937_64& rng) {
  const double u = uniform_open(rng);
  switch (d.family) {
    case Family::Exponential: return -mean * std::log(u);
    case Family::Pareto: return (d.k - 1.0) / d.k * mean * std::pow(u, -1.0 / d.k);
    case Family::Gaussian: return mean + d.sigma * std_normal_quantile(u);
  }
  return 0.0;
}

/// m_c protected scores followed by m_nc others, all drawn from one
/// generator seeded with `seed`. A zero-mean exponential group scores all
/// zeros; a zero-mean Pareto group has no valid density.
inline std::vector<Individual> sample_population(const Scenario& s, const GroupState& x, std::uint64_t seed) {
  validate(x);
  const auto& d = s.distribution();
  if (d.family == Family::Pareto && (is_degenerate(d, x.mu_c) || is_degenerate(d, x.mu_nc)))
    throw std::domain_error("sample_population: Pareto scores need positive means");
  std::mt19937_64 rng(seed);
  std::vector<Individual> pop;
  pop.reserve(static_cast<std::size_t>(s.m()));
  for (std::int64_t i = 0; i < s.m_c(); ++i) pop.push_back({true, sample_score(d, x.mu_c, rng)});
  for (std::int64_t i = 0; i < s.m_nc(); ++i) pop.push_back({false, sample_score(d, x.mu_nc, rng)});
  return pop;
}

struct TrialOutcome {
  std::int64_t accepted_c = 0;
  std::int64_t accepted_nc = 0;
  std::int64_t true_top_n_in_c = 0;
  double accuracy = 0.0;  // share of individuals with f(i) = y(i)
  double dp_gap = 0.0;    // |accepted_c/m_c - accepted_nc/m_nc|
  std::uint64_t seed = 0;
};

/// Seats reserved for the protected group under demographic parity:
/// n m_c / m rounded to nearest, clamped so both groups can fill theirs.
inline std::int64_t dp_protected_seats(const Scenario& s) {
  const auto raw = static_cast<std::int64_t>(
      std::llround(static_cast<double>(s.n()) * static_cast<double>(s.m_c()) / static_cast<double>(s.m())));
  return std::clamp(raw, std::max<std::int64_t>(0, s.n() - s.m_nc()), std::min(s.m_c(), s.n()));
}

/// One finite-population round. Ground truth y is the global top n. The
/// shared policy accepts exactly the top n; demographic parity accepts the
/// top dp_protected_seats() scorers of C and the top remaining seats of the
/// rest. Ties go to the lower index.
inline TrialOutcome run_trial(const Scenario& s, const GroupState& x, std::uint64_t seed) {
  const auto pop = sample_population(s, x, seed);
  const auto n = static_cast<std::size_t>(s.n());
  std::vector<std::size_t> order(pop.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return pop[a].score > pop[b].score; });

  std::vector<char> truth(pop.size(), 0), accepted(pop.size(), 0);
  for (std::size_t r = 0; r < n; ++r) truth[order[r]] = 1;

  if (s.policy() == Policy::SharedThreshold) {
    accepted = truth;
  } else {
    std::int64_t left_c = dp_protected_seats(s);
    std::int64_t left_nc = s.n() - left_c;
    for (std::size_t idx : order) {
      auto& left = pop[idx].protected_group ? left_c : left_nc;
      if (left > 0) accepted[idx] = 1, --left;
    }
  }

  TrialOutcome out;
  out.seed = seed;
  std::size_t agree = 0;
  for (std::size_t i = 0; i < pop.size(); ++i) {
    if (accepted[i] == truth[i]) ++agree;
    if (accepted[i]) (pop[i].protected_group ? out.accepted_c : out.accepted_nc) += 1;
    if (truth[i] && pop[i].protected_group) ++out.true_top_n_in_c;
  }
  out.accuracy = static_cast<double>(agree) / static_cast<double>(pop.size());
  out.dp_gap = std::fabs(static_cast<double>(out.accepted_c) / static_cast<double>(s.m_c()) -
                         static_cast<double>(out.accepted_nc) / static_cast<double>(s.m_nc()));
  return out;
}

struct MonteCarloSummary {
  std::size_t trials = 0;
  std::uint64_t seed = 0;
  double mean_accepted_c = 0.0, var_accepted_c = 0.0;
  double mean_accepted_nc = 0.0, var_accepted_nc = 0.0;
  double mean_accuracy = 0.0, min_accuracy = 0.0;
  double mean_dp_gap = 0.0;
  // Expected-value model: acceptance probabilities from the threshold module
  // and binomial z-scores of the empirical mean acceptances against m_g P_g.
  double p_c = 0.0, p_nc = 0.0;
  double expected_c = 0.0, expected_nc = 0.0;
  double z_c = 0.0, z_nc = 0.0;
  std::vector<TrialOutcome> outcomes;
};

namespace detail {
inline double binomial_z(double mean, double size, double p, std::size_t trials) {
  const double sd = std::sqrt(size * p * (1.0 - p) / static_cast<double>(trials));
  const double diff = mean - size * p;
  if (sd > 0.0) return diff / sd;
  return diff == 0.0 ? 0.0 : std::copysign(std::numeric_limits<double>::infinity(), diff);
}
}  // namespace detail

/// Runs `trials` independent rounds with seeds trial_seed(seed, i). Outcomes
/// are stored by trial index and reduced in index order, so the summary is
/// identical for any worker count.
inline MonteCarloSummary aggregate_trials(const Scenario& s, const GroupState& x, std::size_t trials,
                                          std::uint64_t seed, unsigned workers = 0) {
  if (trials < 1) throw std::domain_error("aggregate_trials: trials must be >= 1");
  MonteCarloSummary sum;
  sum.trials = trials;
  sum.seed = seed;
  sum.outcomes.resize(trials);
  parallel_for(trials, workers, [&](std::size_t i) { sum.outcomes[i] = run_trial(s, x, trial_seed(seed, i)); });

  const double t = static_cast<double>(trials);
  double acc_c = 0.0, acc_nc = 0.0, accuracy = 0.0, gap = 0.0;
  sum.min_accuracy = 1.0;
  for (const auto& o : sum.outcomes) {
    acc_c += static_cast<double>(o.accepted_c);
    acc_nc += static_cast<double>(o.accepted_nc);
    accuracy += o.accuracy;
    gap += o.dp_gap;
    sum.min_accuracy = std::min(sum.min_accuracy, o.accuracy);
  }
  sum.mean_accepted_c = acc_c / t;
  sum.mean_accepted_nc = acc_nc / t;
  sum.mean_accuracy = accuracy / t;
  sum.mean_dp_gap = gap / t;
  if (trials > 1) {
    double sc = 0.0, snc = 0.0;
    for (const auto& o : sum.outcomes) {
      const double dc = static_cast<double>(o.accepted_c) - sum.mean_accepted_c;
      const double dnc = static_cast<double>(o.accepted_nc) - sum.mean_accepted_nc;
      sc += dc * dc;
      snc += dnc * dnc;
    }
    sum.var_accepted_c = sc / (t - 1.0);
    sum.var_accepted_nc = snc / (t - 1.0);
  }

  const ThresholdSolution sol = solve_thresholds(s, x);
  sum.p_c = sol.p_c;
  sum.p_nc = sol.p_nc;
  const double mc = static_cast<double>(s.m_c()), mnc = static_cast<double>(s.m_nc());
  sum.expected_c = mc * sol.p_c;
  sum.expected_nc = mnc * sol.p_nc;
  sum.z_c = detail::binomial_z(sum.mean_accepted_c, mc, sol.p_c, trials);
  sum.z_nc = detail::binomial_z(sum.mean_accepted_nc, mnc, sol.p_nc, trials);
  return sum;
}

}  // namespace fairdyn
