#include "ird/experiment.hpp"

#include <chrono>
#include <cmath>
#include <exception>
#include <sstream>

#include "ird/designer.hpp"
#include "ird/error.hpp"
#include "ird/random.hpp"

namespace ird {

std::string to_string(Condition c) {
  switch (c) {
    case Condition::NominalJoint: return "nominal_joint";
    case Condition::AugmentedJoint: return "augmented_joint";
    case Condition::Independent: return "independent";
  }
  return "unknown";
}

Condition condition_from_string(const std::string& name) {
  if (name == "nominal_joint") return Condition::NominalJoint;
  if (name == "augmented_joint") return Condition::AugmentedJoint;
  if (name == "independent") return Condition::Independent;
  fail(ErrorKind::Validation, "unknown condition '" + name + "'");
}

std::string to_string(SweepAxis a) {
  switch (a) {
    case SweepAxis::None: return "none";
    case SweepAxis::FeaturesPerEnv: return "features_per_env";
    case SweepAxis::EnvCount: return "env_count";
    case SweepAxis::Beta: return "beta";
  }
  return "unknown";
}

SweepAxis sweep_axis_from_string(const std::string& name) {
  if (name == "none") return SweepAxis::None;
  if (name == "features_per_env") return SweepAxis::FeaturesPerEnv;
  if (name == "env_count") return SweepAxis::EnvCount;
  if (name == "beta") return SweepAxis::Beta;
  fail(ErrorKind::Validation, "unknown sweep axis '" + name + "'");
}

ExperimentConfig::ExperimentConfig() {
  train.k_total = 5;
  train.features_per_env = 3;
  train.count = 5;
  train.id_prefix = "train";
  test = train;
  test.features_per_env = test.k_total;
  test.count = 100;
  test.reject_trivial = false;
  test.id_prefix = "test";
  for (std::uint64_t s = 1; s <= 20; ++s) seeds.push_back(s);
}

void ExperimentConfig::validate() const {
  if (seeds.empty()) fail(ErrorKind::Validation, "experiment: at least one seed is required");
  if (conditions.empty()) fail(ErrorKind::Validation, "experiment: no conditions");
  if (designer_resolution < 1) fail(ErrorKind::Validation, "experiment: designer_resolution must be positive");
  if (train.k_total != test.k_total) fail(ErrorKind::Validation, "experiment: train and test k_total differ");
  if (sweep != SweepAxis::None && sweep_values.empty()) {
    fail(ErrorKind::Validation, "experiment: sweep axis given without sweep values");
  }
  for (double v : sweep_points()) {
    ExperimentConfig probe = *this;
    probe.sweep = SweepAxis::None;
    if (sweep == SweepAxis::FeaturesPerEnv) probe.train.features_per_env = static_cast<std::size_t>(v);
    if (sweep == SweepAxis::EnvCount) probe.train.count = static_cast<std::size_t>(v);
    if (sweep == SweepAxis::Beta) probe.inference.beta = v;
    probe.train.validate();
    probe.test.validate();
    probe.inference.validate();
  }
  if (designer_beta && !(*designer_beta >= 0.0)) fail(ErrorKind::Validation, "experiment: designer_beta must be >= 0");
}

std::vector<double> ExperimentConfig::sweep_points() const {
  if (sweep == SweepAxis::None) return {0.0};
  return sweep_values;
}

Json experiment_config_to_json(const ExperimentConfig& c) {
  Json conditions = Json::array();
  for (Condition x : c.conditions) conditions.push_back(to_string(x));
  Json j{{"seeds", c.seeds},
         {"train", env_gen_spec_to_json(c.train)},
         {"test", env_gen_spec_to_json(c.test)},
         {"conditions", conditions},
         {"inference", inference_config_to_json(c.inference)},
         {"designer_resolution", c.designer_resolution},
         {"sweep", {{"axis", to_string(c.sweep)}, {"values", c.sweep_values}}}};
  j["designer_beta"] = c.designer_beta ? Json(*c.designer_beta) : Json(nullptr);
  return j;
}

ExperimentConfig experiment_config_from_json(const Json& j) {
  if (!j.is_object()) fail(ErrorKind::Validation, "experiment config must be a JSON object");
  ExperimentConfig c;
  try {
    if (j.contains("seeds")) {
      const Json& s = j.at("seeds");
      if (s.is_number_integer()) {
        c.seeds.clear();
        for (std::uint64_t i = 1; i <= s.get<std::uint64_t>(); ++i) c.seeds.push_back(i);
      } else {
        c.seeds = s.get<std::vector<std::uint64_t>>();
      }
    }
    if (j.contains("train")) c.train = env_gen_spec_from_json(j.at("train"), c.train);
    if (j.contains("test")) c.test = env_gen_spec_from_json(j.at("test"), c.test);
    if (j.contains("conditions")) {
      c.conditions.clear();
      for (const Json& x : j.at("conditions")) c.conditions.push_back(condition_from_string(x.get<std::string>()));
    }
    if (j.contains("inference")) c.inference = inference_config_from_json(j.at("inference"), c.inference);
    if (j.contains("designer_beta") && !j.at("designer_beta").is_null()) {
      c.designer_beta = j.at("designer_beta").get<double>();
    }
    if (j.contains("designer_resolution")) c.designer_resolution = j.at("designer_resolution").get<int>();
    if (j.contains("sweep")) {
      const Json& s = j.at("sweep");
      c.sweep = sweep_axis_from_string(s.value("axis", std::string("none")));
      c.sweep_values = s.value("values", std::vector<double>{});
    }
  } catch (const Json::exception& e) {
    fail(ErrorKind::Validation, std::string("experiment config: ") + e.what());
  }
  return c;
}

SeedResult run_seed(const ExperimentConfig& base, std::uint64_t seed, double sweep_value) {
  using Clock = std::chrono::steady_clock;
  const auto t0 = Clock::now();
  SeedResult result;
  result.seed = seed;
  result.sweep_value = sweep_value;

  ExperimentConfig cfg = base;
  switch (cfg.sweep) {
    case SweepAxis::FeaturesPerEnv: cfg.train.features_per_env = static_cast<std::size_t>(sweep_value); break;
    case SweepAxis::EnvCount: cfg.train.count = static_cast<std::size_t>(sweep_value); break;
    case SweepAxis::Beta:
      cfg.inference.beta = sweep_value;
      cfg.designer_beta = sweep_value;
      break;
    case SweepAxis::None: break;
  }
  const double designer_beta = cfg.designer_beta.value_or(cfg.inference.beta);
  const std::size_t k = cfg.train.k_total;
  const Hypercube& box = cfg.inference.box;

  Rng theta_rng = make_rng(derive_seed(seed, "theta_star"));
  RewardParams theta_star{std::vector<double>(k)};
  for (double& w : theta_star.weights) w = uniform(theta_rng, box.lo, box.hi);

  cfg.train.seed = derive_seed(seed, "train", {cfg.train.features_per_env, cfg.train.count});
  cfg.test.seed = derive_seed(seed, "test");
  const auto train = generate_environments(cfg.train);
  const auto test = generate_environments(cfg.test);

  const ThetaGrid grid(k, cfg.designer_resolution, box);
  std::vector<PlanTable> tables;
  for (const auto& env : train) {
    tables.emplace_back(env, grid);
    result.planner_calls += tables.back().planner_calls();
  }

  std::vector<ProxyObservation> independent;
  for (std::size_t i = 0; i < train.size(); ++i) {
    independent.push_back(simulate_designer(train[i], tables[i], grid, theta_star, designer_beta,
                                            derive_seed(seed, "designer", {i})));
  }
  const JointProxyObservation joint =
      simulate_joint_designer(train, tables, grid, theta_star, designer_beta, derive_seed(seed, "joint_designer"));

  InferenceConfig inf = cfg.inference;
  inf.seed = derive_seed(seed, "normalizer_caches");
  const NormalizerCaches caches = build_caches(train, inf);
  result.planner_calls += train.size() * inf.mc_samples;

  for (Condition c : cfg.conditions) {
    ConditionResult r;
    if (c == Condition::NominalJoint) {
      r.theta_hat = joint.proxy;
    } else {
      InferenceConfig chain = inf;
      chain.seed = derive_seed(seed, "chain", {static_cast<std::uint64_t>(c)});
      PosteriorSamples samples;
      if (c == Condition::Independent) {
        samples = sample_posterior(
            [&](const RewardParams& t) { return log_posterior_independent(t, independent, caches, box); }, k, chain);
      } else {
        samples = sample_posterior(
            [&](const RewardParams& t) { return log_posterior_joint_augmented(t, joint, caches, box); }, k, chain);
      }
      r.theta_hat = posterior_mean(samples);
      r.acceptance_rate = samples.acceptance_rate;
    }
    r.mean_regret = average_regret(test, r.theta_hat, theta_star);
    result.planner_calls += 2 * test.size();
    result.conditions.push_back(std::move(r));
  }
  result.ok = true;
  result.wall_seconds = std::chrono::duration<double>(Clock::now() - t0).count();
  return result;
}

ExperimentReport run_experiment(const ExperimentConfig& config) {
  config.validate();
  ExperimentReport report;
  report.config = config;
  const auto points = config.sweep_points();
  const std::size_t n_seeds = config.seeds.size();
  const auto n_tasks = static_cast<std::int64_t>(points.size() * n_seeds);
  report.runs.resize(static_cast<std::size_t>(n_tasks));

#pragma omp parallel for schedule(dynamic, 1)
  for (std::int64_t t = 0; t < n_tasks; ++t) {
    const std::size_t p = static_cast<std::size_t>(t) / n_seeds;
    const std::size_t s = static_cast<std::size_t>(t) % n_seeds;
    SeedResult& out = report.runs[static_cast<std::size_t>(t)];
    try {
      out = run_seed(config, config.seeds[s], points[p]);
    } catch (const std::exception& e) {
      out = SeedResult{};
      out.seed = config.seeds[s];
      out.sweep_value = points[p];
      out.error = e.what();
    }
  }

  for (std::size_t p = 0; p < points.size(); ++p) {
    SweepPointSummary point;
    point.sweep_value = points[p];
    for (std::size_t c = 0; c < config.conditions.size(); ++c) {
      ConditionSummary sum;
      double total = 0.0, total_sq = 0.0;
      for (std::size_t s = 0; s < n_seeds; ++s) {
        const SeedResult& r = report.runs[p * n_seeds + s];
        if (!r.ok) continue;
        total += r.conditions[c].mean_regret;
        ++sum.seeds;
      }
      if (sum.seeds > 0) sum.mean = total / static_cast<double>(sum.seeds);
      for (std::size_t s = 0; s < n_seeds; ++s) {
        const SeedResult& r = report.runs[p * n_seeds + s];
        if (r.ok) total_sq += (r.conditions[c].mean_regret - sum.mean) * (r.conditions[c].mean_regret - sum.mean);
      }
      if (sum.seeds > 1) sum.stddev = std::sqrt(total_sq / static_cast<double>(sum.seeds - 1));
      point.conditions.push_back(sum);
    }
    report.summary.push_back(std::move(point));
  }
  for (const auto& r : report.runs) report.partial = report.partial || !r.ok;
  return report;
}

const ConditionSummary& ExperimentReport::summary_for(std::size_t p, Condition c) const {
  for (std::size_t i = 0; i < config.conditions.size(); ++i) {
    if (config.conditions[i] == c) return summary.at(p).conditions[i];
  }
  fail(ErrorKind::InputDomain, "condition " + to_string(c) + " not part of this experiment");
}

std::vector<double> ExperimentReport::per_seed(std::size_t p, Condition c) const {
  std::size_t ci = config.conditions.size();
  for (std::size_t i = 0; i < config.conditions.size(); ++i) {
    if (config.conditions[i] == c) ci = i;
  }
  if (ci == config.conditions.size()) fail(ErrorKind::InputDomain, "condition not part of this experiment");
  std::vector<double> out;
  const std::size_t n = config.seeds.size();
  for (std::size_t s = 0; s < n; ++s) {
    const SeedResult& r = runs.at(p * n + s);
    if (r.ok) out.push_back(r.conditions[ci].mean_regret);
  }
  return out;
}

Json ExperimentReport::to_json() const {
  Json runs_json = Json::array(), timing = Json::array(), summary_json = Json::array();
  for (const SeedResult& r : runs) {
    Json conds = Json::object();
    for (std::size_t c = 0; c < r.conditions.size(); ++c) {
      conds[to_string(config.conditions[c])] = Json{{"mean_regret", r.conditions[c].mean_regret},
                                                    {"acceptance_rate", r.conditions[c].acceptance_rate},
                                                    {"theta_hat", r.conditions[c].theta_hat.weights}};
    }
    Json run{{"seed", r.seed}, {"sweep_point", r.sweep_value}, {"ok", r.ok}, {"planner_calls", r.planner_calls}};
    if (r.ok) {
      run["conditions"] = conds;
    } else {
      run["error"] = r.error;
    }
    runs_json.push_back(std::move(run));
    timing.push_back(Json{{"seed", r.seed}, {"sweep_point", r.sweep_value}, {"wall_seconds", r.wall_seconds}});
  }
  for (const SweepPointSummary& p : summary) {
    Json conds = Json::object();
    for (std::size_t c = 0; c < p.conditions.size(); ++c) {
      conds[to_string(config.conditions[c])] = Json{{"mean_regret", p.conditions[c].mean},
                                                    {"std_regret", p.conditions[c].stddev},
                                                    {"seeds", p.conditions[c].seeds}};
    }
    summary_json.push_back(Json{{"sweep_point", p.sweep_value}, {"conditions", conds}});
  }
  return Json{{"config", experiment_config_to_json(config)},
              {"partial", partial},
              {"summary", summary_json},
              {"runs", runs_json},
              {"timing", timing}};
}

std::string ExperimentReport::to_csv() const {
  std::ostringstream os;
  os.precision(17);
  os << "seed,condition,sweep_point,mean_regret\n";
  for (const SeedResult& r : runs) {
    if (!r.ok) continue;
    for (std::size_t c = 0; c < r.conditions.size(); ++c) {
      os << r.seed << "," << to_string(config.conditions[c]) << "," << r.sweep_value << ","
         << r.conditions[c].mean_regret << "\n";
    }
  }
  return os.str();
}

}  // namespace ird
