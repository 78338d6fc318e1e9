#pragma once

#include <cmath>
#include <cstdint>
#include <string>
#include <string_view>

#include <json.hpp>

#include "fairdyn/error.hpp"

namespace fairdyn {

enum class Family { Exponential, Pareto, Gaussian };
enum class Policy { SharedThreshold, DemographicParity };

inline std::string_view to_string(Family f) {
  switch (f) {
    case Family::Exponential: return "exponential";
    case Family::Pareto: return "pareto";
    case Family::Gaussian: return "gaussian";
  }
  return "?";
}

inline std::string_view to_string(Policy p) {
  return p == Policy::SharedThreshold ? "shared" : "dp";
}

/// Score distribution family plus its shape parameter. Every family is
/// parameterized by its mean; `k` is the Pareto shape and `sigma` the
/// Gaussian standard deviation. The unused field is ignored.
struct DistributionSpec {
  Family family = Family::Exponential;
  double k = 0.0;
  double sigma = 0.0;

  static DistributionSpec exponential() { return {Family::Exponential, 0.0, 0.0}; }
  static DistributionSpec pareto(double k) { return {Family::Pareto, k, 0.0}; }
  static DistributionSpec gaussian(double sigma) { return {Family::Gaussian, 0.0, sigma}; }

  friend bool operator==(const DistributionSpec&, const DistributionSpec&) = default;
};

/// Throws ScenarioError naming the bad shape field.
inline void validate(const DistributionSpec& d) {
  switch (d.family) {
    case Family::Exponential: break;
    case Family::Pareto:
      if (!(std::isfinite(d.k) && d.k > 1.0)) throw ScenarioError("distribution.k", "k must be > 1");
      break;
    case Family::Gaussian:
      if (!(std::isfinite(d.sigma) && d.sigma > 0.0))
        throw ScenarioError("distribution.sigma", "sigma must be > 0");
      break;
  }
}

struct ScenarioParams {
  std::int64_t m_c = 0;
  std::int64_t m_nc = 0;
  std::int64_t n = 0;
  double alpha = 0.0;
  double beta = 0.0;
  DistributionSpec distribution;
  Policy policy = Policy::SharedThreshold;
};

/// Validated, immutable model configuration. The total population is
/// derived from the two group sizes and never stored.
class Scenario {
 public:
  explicit Scenario(const ScenarioParams& p) : p_(p) {
    if (p_.m_c <= 0) throw ScenarioError("m_c", "must be a positive integer");
    if (p_.m_nc <= 0) throw ScenarioError("m_nc", "must be a positive integer");
    if (p_.n <= 0) throw ScenarioError("n", "must be a positive integer");
    if (p_.n >= p_.m_c + p_.m_nc) throw ScenarioError("n", "n exceeds population");
    if (!(p_.alpha >= 0.0 && p_.alpha <= 1.0)) throw ScenarioError("alpha", "alpha out of [0,1]");
    if (!(std::isfinite(p_.beta) && p_.beta > 0.0)) throw ScenarioError("beta", "beta must be > 0");
    validate(p_.distribution);
    if (p_.distribution.family != Family::Pareto) p_.distribution.k = 0.0;
    if (p_.distribution.family != Family::Gaussian) p_.distribution.sigma = 0.0;
  }

  std::int64_t m_c() const noexcept { return p_.m_c; }
  std::int64_t m_nc() const noexcept { return p_.m_nc; }
  std::int64_t m() const noexcept { return p_.m_c + p_.m_nc; }
  std::int64_t n() const noexcept { return p_.n; }
  double alpha() const noexcept { return p_.alpha; }
  double beta() const noexcept { return p_.beta; }
  const DistributionSpec& distribution() const noexcept { return p_.distribution; }
  Policy policy() const noexcept { return p_.policy; }
  const ScenarioParams& params() const noexcept { return p_; }

  /// Acceptance rate when both groups are treated alike.
  double base_rate() const noexcept { return static_cast<double>(p_.n) / static_cast<double>(m()); }

  /// Capacity is not small next to the protected group (n >= m_c/5); the
  /// expected-count approximation degrades there.
  bool capacity_warning() const noexcept { return 5 * p_.n >= p_.m_c; }

  /// Pareto with k <= 2 has infinite variance.
  bool heavy_tail_warning() const noexcept {
    return p_.distribution.family == Family::Pareto && p_.distribution.k <= 2.0;
  }

  Scenario with_policy(Policy policy) const {
    ScenarioParams q = p_;
    q.policy = policy;
    return Scenario(q);
  }

  Scenario with_distribution(const DistributionSpec& d) const {
    ScenarioParams q = p_;
    q.distribution = d;
    return Scenario(q);
  }

  friend bool operator==(const Scenario& a, const Scenario& b) {
    const auto& x = a.p_;
    const auto& y = b.p_;
    return x.m_c == y.m_c && x.m_nc == y.m_nc && x.n == y.n && x.alpha == y.alpha &&
           x.beta == y.beta && x.distribution == y.distribution && x.policy == y.policy;
  }

 private:
  ScenarioParams p_;
};

namespace detail {

inline std::int64_t read_count(const nlohmann::json& doc, const char* key) {
  if (!doc.contains(key)) throw ScenarioError(key, "missing");
  const auto& v = doc.at(key);
  if (v.is_number_integer()) return v.get<std::int64_t>();
  if (v.is_number_float()) {
    double d = v.get<double>();
    if (std::isfinite(d) && d == std::floor(d) && std::fabs(d) < 9e15) return static_cast<std::int64_t>(d);
  }
  throw ScenarioError(key, "must be an integer");
}

inline double read_real(const nlohmann::json& doc, const char* key) {
  if (!doc.contains(key)) throw ScenarioError(key, "missing");
  const auto& v = doc.at(key);
  if (!v.is_number()) throw ScenarioError(key, "must be a number");
  return v.get<double>();
}

inline DistributionSpec read_distribution(const nlohmann::json& d) {
  if (!d.is_object()) throw ScenarioError("distribution", "must be an object");
  for (const auto& [key, _] : d.items()) {
    if (key != "family" && key != "k" && key != "sigma")
      throw ScenarioError("distribution." + key, "unknown key");
  }
  if (!d.contains("family") || !d.at("family").is_string())
    throw ScenarioError("distribution.family", "missing or not a string");
  const auto family = d.at("family").get<std::string>();
  DistributionSpec spec;
  if (family == "exponential") {
    spec = DistributionSpec::exponential();
  } else if (family == "pareto") {
    if (!d.contains("k")) throw ScenarioError("distribution.k", "required for pareto");
    spec = DistributionSpec::pareto(read_real(d, "k"));
  } else if (family == "gaussian") {
    if (!d.contains("sigma")) throw ScenarioError("distribution.sigma", "required for gaussian");
    spec = DistributionSpec::gaussian(read_real(d, "sigma"));
  } else {
    throw ScenarioError("distribution.family", "unknown family '" + family + "'");
  }
  if (spec.family != Family::Pareto && d.contains("k"))
    throw ScenarioError("distribution.k", "only valid for pareto");
  if (spec.family != Family::Gaussian && d.contains("sigma"))
    throw ScenarioError("distribution.sigma", "only valid for gaussian");
  return spec;
}

}  // namespace detail

/// Parses the JSON scenario format:
///   {"m_c", "m_nc", "n", "alpha", "beta",
///    "distribution": {"family": "exponential"|"pareto"|"gaussian", "k"?, "sigma"?},
///    "policy": "shared"|"dp"}
/// `policy` defaults to shared. Unknown keys are rejected.
inline Scenario parse_scenario(std::string_view document) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(document);
  } catch (const nlohmann::json::parse_error& e) {
    throw ScenarioError("", std::string("malformed document: ") + e.what());
  }
  if (!doc.is_object()) throw ScenarioError("", "document must be a JSON object");
  static constexpr std::string_view known[] = {"m_c", "m_nc", "n", "alpha", "beta", "distribution", "policy"};
  for (const auto& [key, _] : doc.items()) {
    bool ok = false;
    for (auto k : known) ok = ok || key == k;
    if (!ok) throw ScenarioError(key, "unknown key");
  }

  ScenarioParams p;
  p.m_c = detail::read_count(doc, "m_c");
  p.m_nc = detail::read_count(doc, "m_nc");
  p.n = detail::read_count(doc, "n");
  p.alpha = detail::read_real(doc, "alpha");
  p.beta = detail::read_real(doc, "beta");
  if (!doc.contains("distribution")) throw ScenarioError("distribution", "missing");
  p.distribution = detail::read_distribution(doc.at("distribution"));
  if (doc.contains("policy")) {
    const auto& v = doc.at("policy");
    if (!v.is_string()) throw ScenarioError("policy", "must be \"shared\" or \"dp\"");
    const auto s = v.get<std::string>();
    if (s == "shared") p.policy = Policy::SharedThreshold;
    else if (s == "dp") p.policy = Policy::DemographicParity;
    else throw ScenarioError("policy", "must be \"shared\" or \"dp\"");
  }
  return Scenario(p);
}

inline nlohmann::json to_json(const Scenario& s) {
  nlohmann::json dist = {{"family", std::string(to_string(s.distribution().family))}};
  if (s.distribution().family == Family::Pareto) dist["k"] = s.distribution().k;
  if (s.distribution().family == Family::Gaussian) dist["sigma"] = s.distribution().sigma;
  return {{"m_c", s.m_c()},   {"m_nc", s.m_nc()},         {"n", s.n()},
          {"alpha", s.alpha()}, {"beta", s.beta()},        {"distribution", dist},
          {"policy", std::string(to_string(s.policy()))}};
}

inline std::string serialize_scenario(const Scenario& s) { return to_json(s).dump(2); }

}  // namespace fairdyn
