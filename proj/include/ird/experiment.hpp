#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "ird/evaluation.hpp"
#include "ird/inference.hpp"
#include "ird/io.hpp"

namespace ird {

enum class Condition { NominalJoint, AugmentedJoint, Independent };

std::string to_string(Condition c);
Condition condition_from_string(const std::string& name);

enum class SweepAxis { None, FeaturesPerEnv, EnvCount, Beta };

std::string to_string(SweepAxis a);
SweepAxis sweep_axis_from_string(const std::string& name);

struct ExperimentConfig {
  std::vector<std::uint64_t> seeds;
  EnvGenSpec train;  // per-seed generation seed is derived; `seed` is ignored
  EnvGenSpec test;   // idem
  std::vector<Condition> conditions{Condition::NominalJoint, Condition::AugmentedJoint,
                                    Condition::Independent};
  InferenceConfig inference;  // inference.seed is ignored; chains are seeded per task
  /// Designer rationality; defaults to the inference beta. A beta sweep sets both.
  std::optional<double> designer_beta;
  int designer_resolution = 9;
  SweepAxis sweep = SweepAxis::None;
  std::vector<double> sweep_values;

  ExperimentConfig();
  void validate() const;
  /// Sweep values, or a single placeholder point when there is no sweep.
  std::vector<double> sweep_points() const;
};

Json experiment_config_to_json(const ExperimentConfig& c);
ExperimentConfig experiment_config_from_json(const Json& j);

struct ConditionResult {
  double mean_regret = 0.0;  // over held-out environments
  double acceptance_rate = 0.0;  // 0 for conditions without inference
  RewardParams theta_hat;
};

struct SeedResult {
  std::uint64_t seed = 0;
  double sweep_value = 0.0;
  bool ok = false;
  std::string error;
  std::vector<ConditionResult> conditions;  // parallel to config.conditions
  std::size_t planner_calls = 0;
  double wall_seconds = 0.0;
};

struct ConditionSummary {
  double mean = 0.0;
  double stddev = 0.0;
  std::size_t seeds = 0;
};

struct SweepPointSummary {
  double sweep_value = 0.0;
  std::vector<ConditionSummary> conditions;  // parallel to config.conditions
};

struct ExperimentReport {
  ExperimentConfig config;
  std::vector<SeedResult> runs;  // sweep-point major, then seed order
  std::vector<SweepPointSummary> summary;
  bool partial = false;

  /// Mean regret of `c` at sweep index `p` over successful seeds.
  const ConditionSummary& summary_for(std::size_t p, Condition c) const;
  /// Per-seed regrets of `c` at sweep index `p` (failed seeds skipped).
  std::vector<double> per_seed(std::size_t p, Condition c) const;

  /// Full report; wall-clock values live only under the "timing" key.
  Json to_json() const;
  /// seed,condition,sweep_point,mean_regret
  std::string to_csv() const;
};

/// One seed at one sweep point: draws theta*, generates training and test
/// environments, simulates designers, runs inference and measures regret.
SeedResult run_seed(const ExperimentConfig& config, std::uint64_t seed, double sweep_value);

/// Every (sweep point, seed) pair; tasks run concurrently and are stored in a
/// fixed order, so the report body does not depend on the thread count.
ExperimentReport run_experiment(const ExperimentConfig& config);

}  // namespace ird
