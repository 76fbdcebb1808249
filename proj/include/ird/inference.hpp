#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "ird/grid_world.hpp"
#include "ird/io.hpp"

namespace ird {

/// A proxy reward designed in one environment, with the feature counts of
/// the trajectory it induces there.
struct ProxyObservation {
  std::string env_id;
  RewardParams proxy;
  FeatureCounts proxy_features;
};

/// Plans `proxy` in `env` and caches the induced feature counts.
ProxyObservation make_observation(const GridEnvironment& env, const RewardParams& proxy);

/// A single jointly designed proxy, observed in every training environment.
struct JointProxyObservation {
  RewardParams proxy;
  std::vector<std::string> env_ids;
  std::vector<FeatureCounts> proxy_features;  // one per environment
};

JointProxyObservation make_joint_observation(std::span<const GridEnvironment> envs,
                                             const RewardParams& proxy);

/// Monte Carlo sample set for the likelihood normalizer of one environment:
/// feature counts of planner-optimal trajectories for M proxies drawn
/// uniformly from the hypercube.
struct NormalizerCache {
  std::string env_id;
  double beta = 0.0;
  std::vector<FeatureCounts> sample_features;
  std::size_t sample_count = 0;

  // Distinct rows of sample_features (first-appearance order) with their
  // multiplicities; log_Z_hat only depends on this compressed form.
  std::vector<double> class_features;  // row-major, classes x k
  std::vector<double> class_log_weight;  // log(multiplicity / M)

  std::size_t k() const { return sample_features.empty() ? 0 : sample_features.front().size(); }
  std::size_t class_count() const { return class_log_weight.size(); }
};

NormalizerCache build_normalizer_cache(const GridEnvironment& env, std::size_t samples, double beta,
                                       std::uint64_t seed, Hypercube box = {});

/// Caches keyed by environment id.
using NormalizerCaches = std::map<std::string, NormalizerCache>;

/// log( (1/M) sum_j exp(beta theta . Phi_j) ), max-shifted.
double log_Z_hat(const RewardParams& theta, const NormalizerCache& cache);

/// beta theta . Phi(xi*_proxy) - log_Z_hat(theta).
double log_likelihood(const ProxyObservation& obs, const RewardParams& theta,
                      const NormalizerCache& cache);

/// Sum of per-observation log-likelihoods plus the uniform log prior on
/// `prior`; -infinity outside the box.
double log_posterior_independent(const RewardParams& theta, std::span<const ProxyObservation> observations,
                                 const NormalizerCaches& caches, const Hypercube& prior = {});

/// Augmented joint posterior: the same proxy is treated as an observation in
/// every environment.
double log_posterior_joint_augmented(const RewardParams& theta, const JointProxyObservation& joint,
                                     const NormalizerCaches& caches, const Hypercube& prior = {});
double log_posterior_joint_augmented(const RewardParams& theta, const RewardParams& proxy,
                                     std::span<const GridEnvironment> envs,
                                     const NormalizerCaches& caches, const Hypercube& prior = {});

struct InferenceConfig {
  double beta = 10.0;
  std::size_t mc_samples = 1000;
  std::size_t chain_length = 20000;
  std::size_t burn_in = 5000;
  std::size_t thinning = 15;
  double proposal_sigma = 0.1;  // 0.05 x (hi - lo) for the default box
  std::uint64_t seed = 0;
  Hypercube box{};

  /// Throws Config naming the offending field.
  void validate() const;
  std::size_t retained_draws() const { return (chain_length - burn_in) / thinning; }
};

Json inference_config_to_json(const InferenceConfig& config);
/// Missing keys keep their defaults.
InferenceConfig inference_config_from_json(const Json& j, InferenceConfig base = {});

struct PosteriorSamples {
  std::vector<RewardParams> draws;
  double acceptance_rate = 0.0;
  std::size_t proposals = 0;
  std::size_t accepted = 0;
  std::size_t longest_rejection_run = 0;
  std::uint64_t seed = 0;
  InferenceConfig config;
  std::vector<std::string> warnings;
};

using LogDensity = std::function<double(const RewardParams&)>;

/// Random-walk Metropolis with an isotropic Gaussian proposal, started at the
/// box center. Proposals outside the box are rejected.
PosteriorSamples sample_posterior(const LogDensity& log_density, std::size_t k,
                                  const InferenceConfig& config);

RewardParams posterior_mean(const PosteriorSamples& samples);
/// Component-wise standard deviation of the draws.
std::vector<double> posterior_stddev(const PosteriorSamples& samples);

/// Maximizes posterior expected reward, which for a linear reward is planning
/// at the posterior mean.
Trajectory plan_with_posterior(const PosteriorSamples& samples, const GridEnvironment& env);

/// Builds one cache per environment with seeds derived from `config.seed`.
NormalizerCaches build_caches(std::span<const GridEnvironment> envs, const InferenceConfig& config);

// Posterior export: JSON lines. First line is a header object
// {"type":"header","k":..,"draws":..,"seed":..,"acceptance_rate":..,
//  "proposals":..,"accepted":..,"config":{..},"warnings":[..]};
// every following line is one draw as a JSON array of k numbers.
std::string posterior_to_jsonl(const PosteriorSamples& samples);
PosteriorSamples posterior_from_jsonl(const std::string& text);

}  // namespace ird
