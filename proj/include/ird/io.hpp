#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "ird/grid_world.hpp"

namespace ird {

using Json = nlohmann::json;

// Environment file:
//   {id, width, height, k, cells: [[f_0..f_k-1] per cell, row-major],
//    start: [r, c], goal: [r, c], horizon}
Json environment_to_json(const GridEnvironment& env);
/// Validates every invariant; the message names the first bad cell.
GridEnvironment environment_from_json(const Json& j);

Json trajectory_to_json(const Trajectory& traj);
Trajectory trajectory_from_json(const Json& j);

Json reward_to_json(const RewardParams& theta);
RewardParams reward_from_json(const Json& j, const std::string& what);

/// A directory of environment files plus manifest.json.
struct EnvironmentSet {
  std::string set_id;
  std::vector<GridEnvironment> environments;
  Json manifest;  // as read; may carry extra keys such as "test_set"
};

void write_environment_set(const std::filesystem::path& dir, const std::string& set_id,
                           const std::vector<GridEnvironment>& envs, const Json& extra = {});
EnvironmentSet read_environment_set(const std::filesystem::path& dir);

/// {"theta": [...]}
void write_theta_file(const std::filesystem::path& path, const RewardParams& theta);
RewardParams read_theta_file(const std::filesystem::path& path);

/// Proxies file written by the simulated designer.
///   independent: {"mode":"independent","proxies":[{"env_id","weights"}...]}
///   joint:       {"mode":"joint","env_ids":[...],"proxies":[{"env_id":null,"weights"}]}
struct ProxySet {
  std::string mode;
  std::vector<std::string> env_ids;
  std::vector<std::optional<std::string>> proxy_env;  // nullopt for the joint proxy
  std::vector<RewardParams> proxies;
};

Json proxy_set_to_json(const ProxySet& set);
ProxySet proxy_set_from_json(const Json& j);

Json read_json_file(const std::filesystem::path& path);
/// Writes `j.dump(2)` plus a trailing newline.
void write_json_file(const std::filesystem::path& path, const Json& j);
void write_text_file(const std::filesystem::path& path, const std::string& text);
std::string read_text_file(const std::filesystem::path& path);

}  // namespace ird
