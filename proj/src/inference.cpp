#include "ird/inference.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <unordered_map>

#include "ird/error.hpp"
#include "ird/kernels.hpp"
#include "ird/random.hpp"

namespace ird {
namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

const NormalizerCache& cache_for(const NormalizerCaches& caches, const std::string& env_id) {
  auto it = caches.find(env_id);
  if (it == caches.end()) fail(ErrorKind::Config, "no normalizer cache for environment '" + env_id + "'");
  return it->second;
}

struct RowHash {
  std::size_t operator()(const std::vector<double>& v) const {
    std::size_t h = 0xcbf29ce484222325ULL;
    for (double x : v) h = (h ^ std::hash<double>{}(x)) * 0x100000001b3ULL;
    return h;
  }
};

}  // namespace

ProxyObservation make_observation(const GridEnvironment& env, const RewardParams& proxy) {
  return ProxyObservation{env.id(), proxy, trajectory_features(env, plan_optimal(env, proxy))};
}

JointProxyObservation make_joint_observation(std::span<const GridEnvironment> envs,
                                             const RewardParams& proxy) {
  JointProxyObservation joint;
  joint.proxy = proxy;
  for (const GridEnvironment& env : envs) {
    joint.env_ids.push_back(env.id());
    joint.proxy_features.push_back(trajectory_features(env, plan_optimal(env, proxy)));
  }
  return joint;
}

NormalizerCache build_normalizer_cache(const GridEnvironment& env, std::size_t samples, double beta,
                                       std::uint64_t seed, Hypercube box) {
  if (samples < 1) fail(ErrorKind::InputDomain, "build_normalizer_cache: M must be at least 1");
  if (!(beta >= 0.0) || !std::isfinite(beta)) {
    fail(ErrorKind::InputDomain, "build_normalizer_cache: beta must be finite and nonnegative");
  }
  box.validate();
  Rng rng = make_rng(seed);
  std::vector<RewardParams> proxies(samples, RewardParams{std::vector<double>(env.k())});
  for (auto& p : proxies) {
    for (double& w : p.weights) w = uniform(rng, box.lo, box.hi);
  }
  auto plans = parallel::plan_batch(env, proxies);

  NormalizerCache cache;
  cache.env_id = env.id();
  cache.beta = beta;
  cache.sample_count = samples;
  cache.sample_features.reserve(samples);
  std::unordered_map<std::vector<double>, std::size_t, RowHash> class_of;
  std::vector<std::size_t> counts;
  for (auto& plan : plans) {
    auto [it, inserted] = class_of.try_emplace(plan.features.phi, counts.size());
    if (inserted) {
      counts.push_back(0);
      cache.class_features.insert(cache.class_features.end(), plan.features.phi.begin(),
                                  plan.features.phi.end());
    }
    ++counts[it->second];
    cache.sample_features.push_back(std::move(plan.features));
  }
  for (std::size_t c : counts) {
    cache.class_log_weight.push_back(std::log(static_cast<double>(c) / static_cast<double>(samples)));
  }
  return cache;
}

double log_Z_hat(const RewardParams& theta, const NormalizerCache& cache) {
  if (cache.class_count() == 0) fail(ErrorKind::InputDomain, "log_Z_hat: empty normalizer cache");
  const std::size_t k = cache.k();
  if (theta.size() != k) fail(ErrorKind::InputDomain, "log_Z_hat: dimension mismatch");
  if (cache.beta == 0.0) return 0.0;
  const std::size_t n = cache.class_count();
  double terms_max = kNegInf;
  // Small fixed buffer avoids an allocation per call for typical class counts.
  thread_local std::vector<double> terms;
  terms.resize(n);
  for (std::size_t c = 0; c < n; ++c) {
    const double* phi = cache.class_features.data() + c * k;
    double r = 0.0;
    for (std::size_t j = 0; j < k; ++j) r += theta.weights[j] * phi[j];
    terms[c] = cache.class_log_weight[c] + cache.beta * r;
    terms_max = std::max(terms_max, terms[c]);
  }
  double sum = 0.0;
  for (double t : terms) sum += std::exp(t - terms_max);
  return terms_max + std::log(sum);
}

double log_likelihood(const ProxyObservation& obs, const RewardParams& theta,
                      const NormalizerCache& cache) {
  if (obs.env_id != cache.env_id) {
    fail(ErrorKind::Config, "log_likelihood: observation from '" + obs.env_id +
                                "' evaluated with the cache of '" + cache.env_id + "'");
  }
  if (cache.beta == 0.0) return 0.0;
  return cache.beta * reward_of(obs.proxy_features, theta) - log_Z_hat(theta, cache);
}

double log_posterior_independent(const RewardParams& theta, std::span<const ProxyObservation> observations,
                                 const NormalizerCaches& caches, const Hypercube& prior) {
  if (!prior.contains(theta)) return kNegInf;
  double lp = prior.log_uniform_density(theta.size());
  for (const ProxyObservation& obs : observations) {
    lp += log_likelihood(obs, theta, cache_for(caches, obs.env_id));
  }
  return lp;
}

double log_posterior_joint_augmented(const RewardParams& theta, const JointProxyObservation& joint,
                                     const NormalizerCaches& caches, const Hypercube& prior) {
  if (!prior.contains(theta)) return kNegInf;
  double lp = prior.log_uniform_density(theta.size());
  for (std::size_t i = 0; i < joint.env_ids.size(); ++i) {
    const NormalizerCache& cache = cache_for(caches, joint.env_ids[i]);
    if (cache.beta == 0.0) continue;
    lp += cache.beta * reward_of(joint.proxy_features[i], theta) - log_Z_hat(theta, cache);
  }
  return lp;
}

double log_posterior_joint_augmented(const RewardParams& theta, const RewardParams& proxy,
                                     std::span<const GridEnvironment> envs,
                                     const NormalizerCaches& caches, const Hypercube& prior) {
  return log_posterior_joint_augmented(theta, make_joint_observation(envs, proxy), caches, prior);
}

void InferenceConfig::validate() const {
  const auto bad = [](const std::string& m) { fail(ErrorKind::Config, "inference config: " + m); };
  if (!(beta >= 0.0) || !std::isfinite(beta)) bad("beta must be finite and nonnegative");
  if (mc_samples < 1) bad("mc_samples must be at least 1");
  if (chain_length < 1) bad("chain_length must be positive");
  if (burn_in >= chain_length) bad("burn_in must be smaller than chain_length");
  if (thinning < 1) bad("thinning must be positive");
  if (retained_draws() < 1) bad("thinning leaves no retained draws after burn-in");
  if (!(proposal_sigma > 0.0) || !std::isfinite(proposal_sigma)) bad("proposal_sigma must be positive");
  box.validate();
}

Json inference_config_to_json(const InferenceConfig& c) {
  return Json{{"beta", c.beta},
              {"mc_samples", c.mc_samples},
              {"chain_length", c.chain_length},
              {"burn_in", c.burn_in},
              {"thinning", c.thinning},
              {"proposal_sigma", c.proposal_sigma},
              {"seed", c.seed},
              {"bounds", {c.box.lo, c.box.hi}}};
}

InferenceConfig inference_config_from_json(const Json& j, InferenceConfig c) {
  if (!j.is_object()) fail(ErrorKind::Validation, "inference config must be a JSON object");
  try {
    if (j.contains("beta")) c.beta = j.at("beta").get<double>();
    if (j.contains("mc_samples")) c.mc_samples = j.at("mc_samples").get<std::size_t>();
    if (j.contains("chain_length")) c.chain_length = j.at("chain_length").get<std::size_t>();
    if (j.contains("burn_in")) c.burn_in = j.at("burn_in").get<std::size_t>();
    if (j.contains("thinning")) c.thinning = j.at("thinning").get<std::size_t>();
    if (j.contains("proposal_sigma")) c.proposal_sigma = j.at("proposal_sigma").get<double>();
    if (j.contains("seed")) c.seed = j.at("seed").get<std::uint64_t>();
    if (j.contains("bounds")) {
      c.box.lo = j.at("bounds").at(0).get<double>();
      c.box.hi = j.at("bounds").at(1).get<double>();
    }
  } catch (const Json::exception& e) {
    fail(ErrorKind::Validation, std::string("inference config: ") + e.what());
  }
  return c;
}

PosteriorSamples sample_posterior(const LogDensity& log_density, std::size_t k,
                                  const InferenceConfig& config) {
  config.validate();
  if (k < 1) fail(ErrorKind::InputDomain, "sample_posterior: k must be positive");
  Rng rng = make_rng(config.seed);
  PosteriorSamples out;
  out.seed = config.seed;
  out.config = config;
  out.draws.reserve(config.retained_draws());

  RewardParams current = config.box.center(k);
  double current_lp = log_density(current);
  RewardParams proposal = current;
  std::size_t rejection_run = 0;

  for (std::size_t step = 0; step < config.chain_length; ++step) {
    for (std::size_t d = 0; d < k; ++d) {
      proposal.weights[d] = current.weights[d] + config.proposal_sigma * standard_normal(rng);
    }
    const double log_u = std::log(uniform01(rng));
    double proposal_lp = kNegInf;
    if (config.box.contains(proposal)) proposal_lp = log_density(proposal);
    ++out.proposals;
    const bool accept = proposal_lp > kNegInf &&
                        (current_lp == kNegInf || log_u < proposal_lp - current_lp);
    if (accept) {
      std::swap(current, proposal);
      current_lp = proposal_lp;
      ++out.accepted;
      rejection_run = 0;
    } else {
      ++rejection_run;
      out.longest_rejection_run = std::max(out.longest_rejection_run, rejection_run);
    }
    if (step >= config.burn_in && (step - config.burn_in + 1) % config.thinning == 0) {
      out.draws.push_back(current);
    }
  }
  out.acceptance_rate = static_cast<double>(out.accepted) / static_cast<double>(out.proposals);
  if (out.longest_rejection_run > config.chain_length / 2) {
    std::ostringstream os;
    os << "chain stuck: " << out.longest_rejection_run << " consecutive rejections out of "
       << config.chain_length << " steps";
    out.warnings.push_back(os.str());
  }
  return out;
}

RewardParams posterior_mean(const PosteriorSamples& samples) {
  if (samples.draws.empty()) fail(ErrorKind::InputDomain, "posterior_mean: no draws");
  const std::size_t k = samples.draws.front().size();
  RewardParams mean{std::vector<double>(k, 0.0)};
  for (const auto& d : samples.draws) {
    for (std::size_t j = 0; j < k; ++j) mean.weights[j] += d.weights[j];
  }
  for (double& m : mean.weights) m /= static_cast<double>(samples.draws.size());
  return mean;
}

std::vector<double> posterior_stddev(const PosteriorSamples& samples) {
  const RewardParams mean = posterior_mean(samples);
  std::vector<double> sd(mean.size(), 0.0);
  for (const auto& d : samples.draws) {
    for (std::size_t j = 0; j < sd.size(); ++j) sd[j] += (d[j] - mean[j]) * (d[j] - mean[j]);
  }
  for (double& s : sd) s = std::sqrt(s / static_cast<double>(samples.draws.size()));
  return sd;
}

Trajectory plan_with_posterior(const PosteriorSamples& samples, const GridEnvironment& env) {
  return plan_optimal(env, posterior_mean(samples));
}

NormalizerCaches build_caches(std::span<const GridEnvironment> envs, const InferenceConfig& config) {
  NormalizerCaches caches;
  for (std::size_t i = 0; i < envs.size(); ++i) {
    caches.emplace(envs[i].id(), build_normalizer_cache(envs[i], config.mc_samples, config.beta,
                                                        derive_seed(config.seed, "normalizer", {i}),
                                                        config.box));
  }
  return caches;
}

}  // namespace ird
