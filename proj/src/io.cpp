#include "ird/io.hpp"

#include <fstream>
#include <sstream>

#include "ird/error.hpp"

namespace ird {
namespace {

void require(bool ok, const std::string& message) {
  if (!ok) fail(ErrorKind::Validation, message);
}

Cell cell_from_json(const Json& j, const std::string& what) {
  require(j.is_array() && j.size() == 2 && j[0].is_number_integer() && j[1].is_number_integer(),
          what + " must be [row, col] integers");
  return Cell{j[0].get<int>(), j[1].get<int>()};
}

int int_field(const Json& j, const char* key, const std::string& where) {
  require(j.contains(key) && j[key].is_number_integer(),
          where + "field '" + key + "' must be an integer");
  return j[key].get<int>();
}

}  // namespace

Json environment_to_json(const GridEnvironment& env) {
  Json cells = Json::array();
  for (std::size_t i = 0; i < env.cell_count(); ++i) {
    const auto f = env.features_at(i);
    cells.push_back(std::vector<double>(f.begin(), f.end()));
  }
  return Json{{"id", env.id()},
              {"width", env.width()},
              {"height", env.height()},
              {"k", env.k()},
              {"cells", std::move(cells)},
              {"start", {env.start().row, env.start().col}},
              {"goal", {env.goal().row, env.goal().col}},
              {"horizon", env.horizon()}};
}

GridEnvironment environment_from_json(const Json& j) {
  require(j.is_object(), "environment must be a JSON object");
  require(j.contains("id") && j["id"].is_string(), "environment field 'id' must be a string");
  const std::string id = j["id"].get<std::string>();
  const std::string where = "environment '" + id + "': ";
  const int width = int_field(j, "width", where);
  const int height = int_field(j, "height", where);
  const int k = int_field(j, "k", where);
  require(width > 0 && height > 0, where + "width and height must be positive");
  require(k > 0, where + "k must be positive");
  require(j.contains("cells") && j["cells"].is_array(), where + "field 'cells' must be an array");
  const Json& cells = j["cells"];
  const std::size_t n = static_cast<std::size_t>(width) * height;
  if (cells.size() != n) {
    std::ostringstream os;
    os << where << "expected " << n << " cells (" << height << " rows x " << width
       << " cols), got " << cells.size();
    fail(ErrorKind::Validation, os.str());
  }
  std::vector<double> features;
  features.reserve(n * k);
  for (std::size_t i = 0; i < n; ++i) {
    const int r = static_cast<int>(i / width), c = static_cast<int>(i % width);
    std::ostringstream cell;
    cell << where << "cell (" << r << "," << c << ") ";
    const Json& f = cells[i];
    require(f.is_array(), cell.str() + "must be an array of features");
    if (f.size() != static_cast<std::size_t>(k)) {
      std::ostringstream os;
      os << cell.str() << "has " << f.size() << " features, expected k=" << k;
      fail(ErrorKind::Validation, os.str());
    }
    for (const Json& v : f) {
      require(v.is_number(), cell.str() + "has a non-numeric feature");
      const double x = v.get<double>();
      require(x >= 0.0, cell.str() + "has a negative feature");
      features.push_back(x);
    }
  }
  require(j.contains("start"), where + "missing 'start'");
  require(j.contains("goal"), where + "missing 'goal'");
  const Cell start = cell_from_json(j["start"], where + "start");
  const Cell goal = cell_from_json(j["goal"], where + "goal");
  const int horizon = int_field(j, "horizon", where);
  return GridEnvironment(id, width, height, static_cast<std::size_t>(k), std::move(features),
                         start, goal, horizon);
}

Json trajectory_to_json(const Trajectory& traj) {
  Json out = Json::array();
  for (Cell c : traj.cells) out.push_back({c.row, c.col});
  return out;
}

Trajectory trajectory_from_json(const Json& j) {
  require(j.is_array(), "trajectory must be an array of [row, col]");
  Trajectory t;
  for (const Json& c : j) t.cells.push_back(cell_from_json(c, "trajectory cell"));
  return t;
}

Json reward_to_json(const RewardParams& theta) { return Json(theta.weights); }

RewardParams reward_from_json(const Json& j, const std::string& what) {
  require(j.is_array() && !j.empty(), what + " must be a nonempty array of numbers");
  RewardParams theta;
  for (const Json& v : j) {
    require(v.is_number(), what + " must contain only numbers");
    theta.weights.push_back(v.get<double>());
  }
  return theta;
}

void write_environment_set(const std::filesystem::path& dir, const std::string& set_id,
                           const std::vector<GridEnvironment>& envs, const Json& extra) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) fail(ErrorKind::Io, "cannot create directory " + dir.string() + ": " + ec.message());
  Json ids = Json::array(), files = Json::array();
  for (const GridEnvironment& env : envs) {
    const std::string file = env.id() + ".json";
    write_json_file(dir / file, environment_to_json(env));
    ids.push_back(env.id());
    files.push_back(file);
  }
  Json manifest = extra.is_object() ? extra : Json::object();
  manifest["set_id"] = set_id;
  manifest["env_ids"] = ids;
  manifest["files"] = files;
  write_json_file(dir / "manifest.json", manifest);
}

EnvironmentSet read_environment_set(const std::filesystem::path& dir) {
  EnvironmentSet set;
  set.manifest = read_json_file(dir / "manifest.json");
  require(set.manifest.contains("set_id") && set.manifest["set_id"].is_string(),
          "manifest " + (dir / "manifest.json").string() + " lacks a string 'set_id'");
  require(set.manifest.contains("files") && set.manifest["files"].is_array(),
          "manifest lacks a 'files' array");
  set.set_id = set.manifest["set_id"].get<std::string>();
  for (const Json& f : set.manifest["files"]) {
    require(f.is_string(), "manifest 'files' entries must be strings");
    const auto path = dir / f.get<std::string>();
    try {
      set.environments.push_back(environment_from_json(read_json_file(path)));
    } catch (const Error& e) {
      throw Error(e.kind(), path.string() + ": " + e.what());
    }
  }
  require(!set.environments.empty(), "environment set " + dir.string() + " is empty");
  const std::size_t k = set.environments.front().k();
  for (const auto& env : set.environments) {
    require(env.k() == k, "environment set " + dir.string() + " mixes feature counts");
  }
  return set;
}

void write_theta_file(const std::filesystem::path& path, const RewardParams& theta) {
  write_json_file(path, Json{{"theta", theta.weights}});
}

RewardParams read_theta_file(const std::filesystem::path& path) {
  const Json j = read_json_file(path);
  require(j.is_object() && j.contains("theta"), path.string() + ": expected {\"theta\": [...]}");
  return reward_from_json(j["theta"], path.string() + ": theta");
}

Json proxy_set_to_json(const ProxySet& set) {
  Json proxies = Json::array();
  for (std::size_t i = 0; i < set.proxies.size(); ++i) {
    Json p;
    p["env_id"] = set.proxy_env[i] ? Json(*set.proxy_env[i]) : Json(nullptr);
    p["weights"] = set.proxies[i].weights;
    proxies.push_back(std::move(p));
  }
  return Json{{"mode", set.mode}, {"env_ids", set.env_ids}, {"proxies", std::move(proxies)}};
}

ProxySet proxy_set_from_json(const Json& j) {
  require(j.is_object(), "proxies file must be a JSON object");
  require(j.contains("mode") && j["mode"].is_string(), "proxies file lacks 'mode'");
  ProxySet set;
  set.mode = j["mode"].get<std::string>();
  require(set.mode == "independent" || set.mode == "joint",
          "proxies 'mode' must be 'independent' or 'joint'");
  require(j.contains("env_ids") && j["env_ids"].is_array(), "proxies file lacks 'env_ids'");
  for (const Json& id : j["env_ids"]) {
    require(id.is_string(), "'env_ids' entries must be strings");
    set.env_ids.push_back(id.get<std::string>());
  }
  require(j.contains("proxies") && j["proxies"].is_array(), "proxies file lacks 'proxies'");
  for (const Json& p : j["proxies"]) {
    require(p.is_object() && p.contains("weights"), "each proxy needs 'weights'");
    set.proxies.push_back(reward_from_json(p["weights"], "proxy weights"));
    if (p.contains("env_id") && p["env_id"].is_string()) {
      set.proxy_env.emplace_back(p["env_id"].get<std::string>());
    } else {
      set.proxy_env.emplace_back(std::nullopt);
    }
  }
  if (set.mode == "joint") {
    require(set.proxies.size() == 1, "joint proxies file must hold exactly one proxy");
  } else {
    require(set.proxies.size() == set.env_ids.size(),
            "independent proxies file must hold one proxy per environment");
    for (std::size_t i = 0; i < set.proxies.size(); ++i) {
      require(set.proxy_env[i].has_value(), "independent proxies must name their env_id");
    }
  }
  return set;
}

Json read_json_file(const std::filesystem::path& path) {
  const std::string text = read_text_file(path);
  try {
    return Json::parse(text);
  } catch (const Json::parse_error& e) {
    fail(ErrorKind::Validation, path.string() + ": " + e.what());
  }
}

void write_json_file(const std::filesystem::path& path, const Json& j) {
  write_text_file(path, j.dump(2) + "\n");
}

void write_text_file(const std::filesystem::path& path, const std::string& text) {
  if (path.has_parent_path()) {
    std::error_code ec;
    std::filesystem::create_directories(path.parent_path(), ec);
  }
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) fail(ErrorKind::Io, "cannot open " + path.string() + " for writing");
  out << text;
  if (!out) fail(ErrorKind::Io, "failed writing " + path.string());
}

std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorKind::Io, "cannot open " + path.string());
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

}  // namespace ird
