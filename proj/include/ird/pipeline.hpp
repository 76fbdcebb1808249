#pragma once

// File-level steps shared by the command line and the design service:
// simulated proxies for an environment set, and posteriors from proxies.

#include <span>
#include <string>

#include "ird/inference.hpp"
#include "ird/io.hpp"

namespace ird {

/// Independent posterior sampled with caches seeded from `config.seed`.
PosteriorSamples infer_independent(std::span<const GridEnvironment> envs,
                                   std::span<const ProxyObservation> observations, const InferenceConfig& config);
PosteriorSamples infer_joint_augmented(std::span<const GridEnvironment> envs, const JointProxyObservation& joint,
                                       const InferenceConfig& config);

/// mode is "independent" (one proxy per environment) or "joint" (one in
/// total). Designer seeds derive from `seed`.
ProxySet simulate_proxies(const std::string& mode, std::span<const GridEnvironment> envs,
                          const RewardParams& theta_star, double beta, int resolution, std::uint64_t seed);

/// Posterior for a proxies file over the environments it names. Joint
/// proxies use the augmented posterior.
PosteriorSamples infer_from_proxies(const ProxySet& proxies, std::span<const GridEnvironment> envs,
                                    const InferenceConfig& config);

}  // namespace ird
