#include "ird/oracle_check.hpp"

#include <cmath>

#include "ird/designer.hpp"
#include "ird/error.hpp"
#include "ird/evaluation.hpp"
#include "ird/io.hpp"
#include "ird/kernels.hpp"
#include "ird/random.hpp"

namespace ird {

void OracleCheckConfig::validate() const {
  if (width < 2 || height < 2) fail(ErrorKind::Validation, "oracle-check: grid must be at least 2x2");
  if (k < 1) fail(ErrorKind::Validation, "oracle-check: k must be positive");
  if (env_count < 1) fail(ErrorKind::Validation, "oracle-check: env_count must be positive");
  if (resolution < 1) fail(ErrorKind::Validation, "oracle-check: resolution must be positive");
  if (seeds.empty()) fail(ErrorKind::Validation, "oracle-check: at least one seed is required");
  if (!(tv_tolerance >= 0.0)) fail(ErrorKind::Validation, "oracle-check: tv_tolerance must be >= 0");
  inference.validate();
}

Json oracle_check_config_to_json(const OracleCheckConfig& c) {
  return Json{{"width", c.width},         {"height", c.height},
              {"k", c.k},                 {"env_count", c.env_count},
              {"resolution", c.resolution}, {"seeds", c.seeds},
              {"tv_tolerance", c.tv_tolerance}, {"inference", inference_config_to_json(c.inference)}};
}

OracleCheckConfig oracle_check_config_from_json(const Json& j) {
  if (!j.is_object()) fail(ErrorKind::Validation, "oracle-check config must be a JSON object");
  OracleCheckConfig c;
  for (const auto& [key, value] : j.items()) {
    try {
      if (key == "width") c.width = value.get<std::size_t>();
      else if (key == "height") c.height = value.get<std::size_t>();
      else if (key == "k") c.k = value.get<std::size_t>();
      else if (key == "env_count") c.env_count = value.get<std::size_t>();
      else if (key == "resolution") c.resolution = value.get<int>();
      else if (key == "tv_tolerance") c.tv_tolerance = value.get<double>();
      else if (key == "inference") c.inference = inference_config_from_json(value);
      else if (key == "seeds") {
        if (value.is_number_integer()) {
          c.seeds.clear();
          for (std::uint64_t s = 1; s <= value.get<std::uint64_t>(); ++s) c.seeds.push_back(s);
        } else {
          c.seeds = value.get<std::vector<std::uint64_t>>();
        }
      } else {
        fail(ErrorKind::Validation, "oracle-check config: unknown field '" + key + "'");
      }
    } catch (const Json::exception& e) {
      fail(ErrorKind::Validation, "oracle-check config field '" + key + "': " + e.what());
    }
  }
  c.validate();
  return c;
}

double total_variation(const std::vector<double>& p, const std::vector<double>& q) {
  if (p.size() != q.size()) fail(ErrorKind::InputDomain, "total_variation: histogram lengths differ");
  double tv = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) tv += std::abs(p[i] - q[i]);
  return 0.5 * tv;
}

double OracleSeedReport::max_tv() const {
  double m = 0.0;
  for (double t : tv) m = std::max(m, t);
  return m;
}

bool OracleCheckReport::passed() const {
  for (const auto& s : seeds) {
    if (s.max_tv() > config.tv_tolerance) return false;
  }
  return true;
}

Json OracleCheckReport::to_json() const {
  Json runs = Json::array();
  for (const auto& s : seeds) {
    Json proxies = Json::array();
    for (const auto& p : s.proxies) proxies.push_back(reward_to_json(p));
    runs.push_back(Json{{"seed", s.seed},
                        {"theta_star", reward_to_json(s.theta_star)},
                        {"proxies", proxies},
                        {"exhaustive_marginals", s.exhaustive_marginals},
                        {"chain_marginals", s.chain_marginals},
                        {"tv", s.tv},
                        {"max_tv", s.max_tv()},
                        {"acceptance_rate", s.acceptance_rate},
                        {"warnings", s.warnings},
                        {"pass", s.max_tv() <= config.tv_tolerance}});
  }
  return Json{{"config", oracle_check_config_to_json(config)}, {"seeds", runs}, {"pass", passed()}};
}

OracleSeedReport run_oracle_seed(const OracleCheckConfig& config, std::uint64_t seed) {
  EnvGenSpec spec;
  spec.width = config.width;
  spec.height = config.height;
  spec.k_total = config.k;
  spec.features_per_env = config.k;
  spec.count = config.env_count;
  spec.seed = derive_seed(seed, "envs");
  spec.id_prefix = "oracle";
  const auto envs = generate_environments(spec);

  OracleSeedReport out;
  out.seed = seed;
  Rng rng = make_rng(derive_seed(seed, "theta_star"));
  const ThetaGrid grid(config.k, config.resolution, config.inference.box);
  out.theta_star.weights.resize(config.k);
  for (double& w : out.theta_star.weights) w = uniform(rng, grid.box().lo, grid.box().hi);

  const double beta = config.inference.beta;
  std::vector<ProxyObservation> observations;
  for (std::size_t i = 0; i < envs.size(); ++i) {
    observations.push_back(simulate_designer(envs[i], out.theta_star, beta, grid, derive_seed(seed, "designer", {i})));
    out.proxies.push_back(observations.back().proxy);
  }
  const auto exact = exhaustive_posterior(observations, envs, grid, grid, beta);

  InferenceConfig chain = config.inference;
  chain.seed = derive_seed(seed, "chain");
  const auto caches = build_caches(envs, chain);
  const auto samples = sample_posterior(
      [&](const RewardParams& t) { return log_posterior_independent(t, observations, caches); }, config.k, chain);
  out.acceptance_rate = samples.acceptance_rate;
  out.warnings = samples.warnings;

  const auto res = static_cast<std::size_t>(config.resolution);
  for (std::size_t d = 0; d < config.k; ++d) {
    std::vector<double> hist(res, 0.0);
    const double w = 1.0 / static_cast<double>(samples.draws.size());
    for (const auto& draw : samples.draws) {
      hist[static_cast<std::size_t>(grid.coords(grid.snap(draw))[d])] += w;
    }
    out.exhaustive_marginals.push_back(exact.marginal(d));
    out.tv.push_back(total_variation(hist, out.exhaustive_marginals.back()));
    out.chain_marginals.push_back(std::move(hist));
  }
  return out;
}

OracleCheckReport run_oracle_check(const OracleCheckConfig& config) {
  config.validate();
  OracleCheckReport report;
  report.config = config;
  report.seeds = parallel::map_indexed<OracleSeedReport>(static_cast<std::int64_t>(config.seeds.size()), [&](std::int64_t i) {
    return run_oracle_seed(config, config.seeds[static_cast<std::size_t>(i)]);
  });
  return report;
}

}  // namespace ird
