#pragma once

#include <random>

#include "fairdyn/scenario.hpp"

namespace fixtures {

inline fairdyn::Scenario make(std::int64_t m_c, std::int64_t m_nc, std::int64_t n, double alpha, double beta,
                              fairdyn::DistributionSpec d = fairdyn::DistributionSpec::exponential(),
                              fairdyn::Policy policy = fairdyn::Policy::SharedThreshold) {
  return fairdyn::Scenario(fairdyn::ScenarioParams{m_c, m_nc, n, alpha, beta, d, policy});
}

inline fairdyn::Scenario baseline(fairdyn::Policy policy = fairdyn::Policy::SharedThreshold) {
  return make(100, 200, 50, 0.5, 5.0, fairdyn::DistributionSpec::exponential(), policy);
}

inline fairdyn::Scenario small() { return make(50, 100, 20, 0.5, 5.0); }

/// A random valid scenario of the given family.
inline fairdyn::Scenario random_scenario(std::mt19937_64& rng, fairdyn::Family family,
                                         fairdyn::Policy policy = fairdyn::Policy::SharedThreshold) {
  std::uniform_int_distribution<std::int64_t> size(5, 500);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const std::int64_t m_c = size(rng), m_nc = size(rng);
  std::uniform_int_distribution<std::int64_t> cap(1, m_c + m_nc - 1);
  fairdyn::DistributionSpec d = fairdyn::DistributionSpec::exponential();
  if (family == fairdyn::Family::Pareto) d = fairdyn::DistributionSpec::pareto(1.2 + 4.0 * unit(rng));
  if (family == fairdyn::Family::Gaussian) d = fairdyn::DistributionSpec::gaussian(0.1 + 3.0 * unit(rng));
  return make(m_c, m_nc, cap(rng), 0.05 + 0.95 * unit(rng), 0.1 + 10.0 * unit(rng), d, policy);
}

}  // namespace fixtures
