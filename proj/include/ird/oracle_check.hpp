#pragma once

// MCMC versus exhaustive-posterior comparison on small random instances.

#include <cstdint>
#include <vector>

#include "ird/inference.hpp"
#include "ird/io.hpp"

namespace ird {

struct OracleCheckConfig {
  std::size_t width = 3;
  std::size_t height = 3;
  std::size_t k = 3;
  std::size_t env_count = 1;
  int resolution = 9;
  std::vector<std::uint64_t> seeds{1, 2, 3};
  double tv_tolerance = 0.05;
  // beta is shared by the simulated designer and the likelihood; the
  // inference seed is replaced by a per-seed stream.
  InferenceConfig inference;

  void validate() const;
};

Json oracle_check_config_to_json(const OracleCheckConfig& c);
OracleCheckConfig oracle_check_config_from_json(const Json& j);

struct OracleSeedReport {
  std::uint64_t seed = 0;
  RewardParams theta_star;
  std::vector<RewardParams> proxies;
  std::vector<std::vector<double>> exhaustive_marginals;  // per dimension, `resolution` bins
  std::vector<std::vector<double>> chain_marginals;
  std::vector<double> tv;  // per dimension
  double acceptance_rate = 0.0;
  std::vector<std::string> warnings;

  double max_tv() const;
};

struct OracleCheckReport {
  OracleCheckConfig config;
  std::vector<OracleSeedReport> seeds;

  bool passed() const;
  Json to_json() const;
};

/// Binned total-variation distance between two histograms of equal length.
double total_variation(const std::vector<double>& p, const std::vector<double>& q);

OracleSeedReport run_oracle_seed(const OracleCheckConfig& config, std::uint64_t seed);
OracleCheckReport run_oracle_check(const OracleCheckConfig& config);

}  // namespace ird
