#include "ird/pipeline.hpp"

#include <map>

#include "ird/designer.hpp"
#include "ird/error.hpp"
#include "ird/random.hpp"

namespace ird {

PosteriorSamples infer_independent(std::span<const GridEnvironment> envs,
                                   std::span<const ProxyObservation> observations, const InferenceConfig& config) {
  if (envs.empty()) fail(ErrorKind::Validation, "inference needs at least one environment");
  const NormalizerCaches caches = build_caches(envs, config);
  return sample_posterior(
      [&](const RewardParams& t) { return log_posterior_independent(t, observations, caches, config.box); },
      envs.front().k(), config);
}

PosteriorSamples infer_joint_augmented(std::span<const GridEnvironment> envs, const JointProxyObservation& joint,
                                       const InferenceConfig& config) {
  if (envs.empty()) fail(ErrorKind::Validation, "inference needs at least one environment");
  const NormalizerCaches caches = build_caches(envs, config);
  return sample_posterior(
      [&](const RewardParams& t) { return log_posterior_joint_augmented(t, joint, caches, config.box); },
      envs.front().k(), config);
}

namespace {

void check_k(std::span<const GridEnvironment> envs, std::size_t k, const std::string& what) {
  if (envs.empty()) fail(ErrorKind::Validation, "no environments given");
  for (const auto& e : envs) {
    if (e.k() != k) {
      fail(ErrorKind::Validation, what + " has k=" + std::to_string(k) + " but environment '" + e.id() +
                                      "' has k=" + std::to_string(e.k()));
    }
  }
}

}  // namespace

ProxySet simulate_proxies(const std::string& mode, std::span<const GridEnvironment> envs,
                          const RewardParams& theta_star, double beta, int resolution, std::uint64_t seed) {
  check_k(envs, theta_star.size(), "theta*");
  if (!(beta >= 0.0)) fail(ErrorKind::Validation, "designer beta must be >= 0");
  const ThetaGrid grid(theta_star.size(), resolution);
  ProxySet set;
  set.mode = mode;
  for (const auto& e : envs) set.env_ids.push_back(e.id());
  if (mode == "independent") {
    for (std::size_t i = 0; i < envs.size(); ++i) {
      const auto obs = simulate_designer(envs[i], theta_star, beta, grid, derive_seed(seed, "designer", {i}));
      set.proxies.push_back(obs.proxy);
      set.proxy_env.emplace_back(envs[i].id());
    }
  } else if (mode == "joint") {
    const auto joint = simulate_joint_designer(envs, theta_star, beta, grid, derive_seed(seed, "joint_designer"));
    set.proxies.push_back(joint.proxy);
    set.proxy_env.emplace_back(std::nullopt);
  } else {
    fail(ErrorKind::Validation, "mode must be 'independent' or 'joint', got '" + mode + "'");
  }
  return set;
}

PosteriorSamples infer_from_proxies(const ProxySet& proxies, std::span<const GridEnvironment> envs,
                                    const InferenceConfig& config) {
  if (proxies.proxies.empty()) fail(ErrorKind::Validation, "proxies file holds no proxies");
  check_k(envs, proxies.proxies.front().size(), "proxy");
  std::map<std::string, const GridEnvironment*> by_id;
  for (const auto& e : envs) by_id[e.id()] = &e;
  std::vector<GridEnvironment> used;
  for (const auto& id : proxies.env_ids) {
    const auto it = by_id.find(id);
    if (it == by_id.end()) fail(ErrorKind::Validation, "proxies reference unknown environment '" + id + "'");
    used.push_back(*it->second);
  }
  if (proxies.mode == "joint") {
    return infer_joint_augmented(used, make_joint_observation(used, proxies.proxies.front()), config);
  }
  std::vector<ProxyObservation> obs;
  for (std::size_t i = 0; i < proxies.proxies.size(); ++i) {
    const auto it = by_id.find(*proxies.proxy_env[i]);
    if (it == by_id.end()) {
      fail(ErrorKind::Validation, "proxy references unknown environment '" + *proxies.proxy_env[i] + "'");
    }
    if (proxies.proxies[i].size() != it->second->k()) fail(ErrorKind::Validation, "proxy k does not match its environment");
    obs.push_back(make_observation(*it->second, proxies.proxies[i]));
  }
  return infer_independent(used, obs, config);
}

}  // namespace ird
