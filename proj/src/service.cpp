#include "ird/service.hpp"

#include <algorithm>
#include <chrono>
#include <condition_variable>
#include <fstream>
#include <iomanip>
#include <set>
#include <sstream>

#include "ird/error.hpp"
#include "ird/evaluation.hpp"
#include "ird/pipeline.hpp"

namespace ird {
namespace fs = std::filesystem;

std::string to_string(DesignMode m) { return m == DesignMode::Joint ? "joint" : "independent"; }

std::string to_string(SessionStatus s) {
  switch (s) {
    case SessionStatus::Designing: return "designing";
    case SessionStatus::Inferring: return "inferring";
    case SessionStatus::Done: return "done";
  }
  return "unknown";
}

namespace {

DesignMode mode_from_string(const std::string& m) {
  if (m == "independent") return DesignMode::Independent;
  if (m == "joint") return DesignMode::Joint;
  fail(ErrorKind::Validation, "mode must be \"independent\" or \"joint\", got \"" + m + "\"");
}

double now_seconds() {
  return std::chrono::duration<double>(std::chrono::system_clock::now().time_since_epoch()).count();
}

// Rejects non-objects, unknown keys and missing required keys.
void check_body(const Json& body, const std::set<std::string>& required, const std::set<std::string>& optional,
                const std::string& what) {
  if (!body.is_object()) fail(ErrorKind::Validation, what + ": request body must be a JSON object");
  for (const auto& [key, _] : body.items()) {
    if (!required.count(key) && !optional.count(key)) {
      fail(ErrorKind::Validation, what + ": unknown field \"" + key + "\"");
    }
  }
  for (const auto& key : required) {
    if (!body.contains(key)) fail(ErrorKind::Validation, what + ": missing field \"" + key + "\"");
  }
}

std::string string_field(const Json& body, const std::string& key, const std::string& what) {
  if (!body.at(key).is_string()) fail(ErrorKind::Validation, what + ": field \"" + key + "\" must be a string");
  return body.at(key).get<std::string>();
}

// Resource ids become path components, so keep them to a safe alphabet.
void check_id(const std::string& id, const std::string& what) {
  const bool ok = !id.empty() && id.size() <= 128 && id != "." && id != ".." &&
                  std::all_of(id.begin(), id.end(), [](char c) {
                    return std::isalnum(static_cast<unsigned char>(c)) || c == '-' || c == '_' || c == '.';
                  });
  if (!ok) fail(ErrorKind::Validation, what + " \"" + id + "\" is not a valid identifier");
}

RewardParams weights_in_box(const Json& body, std::size_t k, const Hypercube& box, const std::string& what) {
  const RewardParams w = reward_from_json(body.at("weights"), what + ": weights");
  if (w.size() != k) {
    fail(ErrorKind::Validation,
         what + ": weights has " + std::to_string(w.size()) + " components, expected " + std::to_string(k));
  }
  std::ostringstream bad;
  for (std::size_t i = 0; i < w.size(); ++i) {
    if (!(w[i] >= box.lo && w[i] <= box.hi)) {
      bad << (bad.tellp() > 0 ? ", " : "") << "weights[" << i << "]=" << w[i];
    }
  }
  if (bad.tellp() > 0) {
    fail(ErrorKind::Validation, what + ": outside [" + std::to_string(box.lo) + ", " + std::to_string(box.hi) +
                                    "]: " + bad.str());
  }
  return w;
}

Json posterior_summary(const PosteriorSamples& s) {
  return Json{{"mean", posterior_mean(s).weights},
              {"stddev", posterior_stddev(s)},
              {"draws", s.draws.size()},
              {"acceptance_rate", s.acceptance_rate},
              {"seed", s.seed},
              {"warnings", s.warnings}};
}

}  // namespace

void SessionState::apply(const SessionEvent& e) {
  const Json& d = e.data;
  if (e.type == "created") {
    session_id = d.at("session_id").get<std::string>();
    mode = mode_from_string(d.at("mode").get<std::string>());
    env_set_id = d.at("env_set_id").get<std::string>();
    theta_star_id = d.at("theta_star_id").get<std::string>();
    created_t = e.t;
    status = SessionStatus::Designing;
    slots = d.at("slots").get<std::vector<std::string>>();
  } else if (e.type == "preview") {
    const auto env = d.at("env_id").get<std::string>();
    ++preview_counts[env];
    const std::string slot = mode == DesignMode::Joint ? kJointSlot : env;
    first_activity_t.emplace(slot, e.t);
  } else if (e.type == "finalized") {
    const auto slot = d.at("slot").get<std::string>();
    finalized[slot] = reward_from_json(d.at("weights"), "event weights");
    finalized_t[slot] = e.t;
    if (finalized.size() == slots.size()) status = SessionStatus::Inferring;
  } else if (e.type == "inference_started") {
    status = SessionStatus::Inferring;
    job_running = true;
    error.reset();
  } else if (e.type == "inference_done") {
    status = SessionStatus::Done;
    job_running = false;
    result = d.at("result");
  } else if (e.type == "inference_failed") {
    status = SessionStatus::Designing;
    job_running = false;
    error = d.at("error").get<std::string>();
  } else {
    fail(ErrorKind::Validation, "unknown session event type \"" + e.type + "\"");
  }
}

struct DesignService::EnvSetCache {
  EnvironmentSet set;
  std::vector<GridEnvironment> test;
  std::string test_set_id;

  const GridEnvironment& env(const std::string& id) const {
    for (const auto& e : set.environments) {
      if (e.id() == id) return e;
    }
    fail(ErrorKind::NotFound, "environment \"" + id + "\" is not part of set \"" + set.set_id + "\"");
  }
};

struct DesignService::Session {
  std::mutex m;
  std::condition_variable idle;
  SessionState state;
  fs::path log;
  double last_t = 0.0;
  std::shared_ptr<const EnvSetCache> envs;
  RewardParams theta_star;
  std::vector<Trajectory> targets;  // parallel to envs->set.environments
  std::thread job;
};

DesignService::DesignService(fs::path data_dir, InferenceConfig default_inference)
    : data_dir_(std::move(data_dir)), default_inference_(std::move(default_inference)) {
  default_inference_.validate();
  fs::create_directories(data_dir_ / "sessions");
  std::vector<fs::path> logs;
  for (const auto& entry : fs::directory_iterator(data_dir_ / "sessions")) {
    if (entry.path().extension() == ".jsonl") logs.push_back(entry.path());
  }
  std::sort(logs.begin(), logs.end());
  for (const auto& path : logs) {
    auto s = std::make_shared<Session>();
    s->log = path;
    s->state = replay(path);
    s->envs = env_set(s->state.env_set_id);
    s->theta_star = read_theta_file(data_dir_ / "theta_stars" / (s->state.theta_star_id + ".json"));
    for (const auto& e : s->envs->set.environments) s->targets.push_back(plan_optimal(e, s->theta_star));
    s->last_t = now_seconds();
    if (s->state.job_running) append(*s, "inference_failed", Json{{"error", "inference interrupted by a restart"}});
    const auto& id = s->state.session_id;
    if (id.size() > 2 && id.rfind("s-", 0) == 0) {
      next_id_ = std::max<std::uint64_t>(next_id_, std::stoull(id.substr(2)) + 1);
    }
    sessions_[id] = s;
  }
}

DesignService::~DesignService() {
  std::vector<std::shared_ptr<Session>> all;
  {
    std::lock_guard lock(mutex_);
    for (auto& [_, s] : sessions_) all.push_back(s);
  }
  for (auto& s : all) {
    if (s->job.joinable()) s->job.join();
  }
}

SessionState DesignService::replay(const fs::path& log_file) {
  std::ifstream in(log_file);
  if (!in) fail(ErrorKind::Io, "cannot open session log " + log_file.string());
  SessionState state;
  std::string line;
  std::size_t n = 0;
  double last = -1.0;
  while (std::getline(in, line)) {
    ++n;
    if (line.empty()) continue;
    Json j;
    try {
      j = Json::parse(line);
    } catch (const Json::exception& e) {
      fail(ErrorKind::Validation, log_file.string() + ":" + std::to_string(n) + ": " + e.what());
    }
    SessionEvent e{j.at("type").get<std::string>(), j.at("t").get<double>(), j.value("data", Json::object())};
    if (e.t < last) fail(ErrorKind::Validation, log_file.string() + ":" + std::to_string(n) + ": timestamps go backwards");
    last = e.t;
    state.apply(e);
  }
  if (n == 0) fail(ErrorKind::Validation, log_file.string() + ": empty session log");
  return state;
}

std::shared_ptr<DesignService::Session> DesignService::find(const std::string& id) {
  std::lock_guard lock(mutex_);
  auto it = sessions_.find(id);
  if (it == sessions_.end()) fail(ErrorKind::NotFound, "no session \"" + id + "\"");
  return it->second;
}

std::shared_ptr<const DesignService::EnvSetCache> DesignService::env_set(const std::string& set_id) {
  check_id(set_id, "environment set id");
  {
    std::lock_guard lock(mutex_);
    auto it = env_sets_.find(set_id);
    if (it != env_sets_.end()) return it->second;
  }
  const fs::path dir = data_dir_ / "env_sets" / set_id;
  if (!fs::exists(dir / "manifest.json")) fail(ErrorKind::NotFound, "no environment set \"" + set_id + "\"");
  auto cache = std::make_shared<EnvSetCache>();
  cache->set = read_environment_set(dir);
  if (cache->set.manifest.contains("test_set")) {
    cache->test_set_id = cache->set.manifest.at("test_set").get<std::string>();
    check_id(cache->test_set_id, "test set id");
    const fs::path test_dir = data_dir_ / "env_sets" / cache->test_set_id;
    if (!fs::exists(test_dir / "manifest.json")) {
      fail(ErrorKind::NotFound, "test set \"" + cache->test_set_id + "\" of \"" + set_id + "\" does not exist");
    }
    cache->test = read_environment_set(test_dir).environments;
  }
  std::lock_guard lock(mutex_);
  return env_sets_.emplace(set_id, cache).first->second;
}

void DesignService::append(Session& s, const std::string& type, Json data) {
  SessionEvent e{type, std::max(now_seconds(), s.last_t), std::move(data)};
  s.last_t = e.t;
  std::ofstream out(s.log, std::ios::app);
  out << Json{{"type", e.type}, {"t", e.t}, {"data", e.data}}.dump() << "\n";
  out.flush();
  if (!out) fail(ErrorKind::Io, "cannot append to " + s.log.string());
  s.state.apply(e);
}

Json DesignService::view(const Session& s) const {
  const SessionState& st = s.state;
  Json envs = Json::array();
  const auto& list = s.envs->set.environments;
  for (std::size_t i = 0; i < list.size(); ++i) {
    const auto& id = list[i].id();
    Json e{{"env_id", id}, {"target_trajectory", trajectory_to_json(s.targets[i])}};
    auto pc = st.preview_counts.find(id);
    e["previews"] = pc == st.preview_counts.end() ? 0 : pc->second;
    if (st.mode == DesignMode::Independent) e["finalized"] = st.finalized.count(id) > 0;
    envs.push_back(std::move(e));
  }
  Json slots = Json::array(), pending = Json::array();
  for (const auto& name : st.slots) {
    Json info{{"slot", name}, {"finalized", st.finalized.count(name) > 0}};
    if (st.finalized.count(name)) {
      // Design time runs from the first preview of the slot (or session
      // creation when it was finalized without previews).
      auto first = st.first_activity_t.find(name);
      const double from = first == st.first_activity_t.end() ? st.created_t : first->second;
      info["design_seconds"] = st.finalized_t.at(name) - from;
    } else {
      pending.push_back(name);
    }
    slots.push_back(std::move(info));
  }
  Json v{{"session_id", st.session_id},
         {"mode", to_string(st.mode)},
         {"env_set_id", st.env_set_id},
         {"status", to_string(st.status)},
         {"environments", envs},
         {"slots", slots},
         {"pending", pending},
         {"job_running", st.job_running}};
  if (st.error) v["error"] = *st.error;
  return v;
}

Json DesignService::create_session(const Json& body) {
  check_body(body, {"mode", "env_set_id", "theta_star_id"}, {}, "create_session");
  const DesignMode mode = mode_from_string(string_field(body, "mode", "create_session"));
  const auto set_id = string_field(body, "env_set_id", "create_session");
  const auto theta_id = string_field(body, "theta_star_id", "create_session");
  check_id(theta_id, "theta_star id");
  auto envs = env_set(set_id);
  const fs::path theta_path = data_dir_ / "theta_stars" / (theta_id + ".json");
  if (!fs::exists(theta_path)) fail(ErrorKind::NotFound, "no theta_star \"" + theta_id + "\"");
  const RewardParams theta = read_theta_file(theta_path);
  const std::size_t k = envs->set.environments.front().k();
  if (theta.size() != k) {
    fail(ErrorKind::Validation, "theta_star \"" + theta_id + "\" has " + std::to_string(theta.size()) +
                                    " components, environments have k=" + std::to_string(k));
  }
  if (envs->test.empty()) {
    fail(ErrorKind::Validation, "environment set \"" + set_id + "\" names no test_set for regret evaluation");
  }

  auto s = std::make_shared<Session>();
  s->envs = envs;
  s->theta_star = theta;
  for (const auto& e : envs->set.environments) s->targets.push_back(plan_optimal(e, theta));
  Json slots = Json::array();
  if (mode == DesignMode::Joint) {
    slots.push_back(kJointSlot);
  } else {
    for (const auto& e : envs->set.environments) slots.push_back(e.id());
  }
  std::string id;
  {
    std::lock_guard lock(mutex_);
    std::ostringstream os;
    os << "s-" << std::setw(6) << std::setfill('0') << next_id_++;
    id = os.str();
    s->log = data_dir_ / "sessions" / (id + ".jsonl");
    sessions_[id] = s;
  }
  std::lock_guard lock(s->m);
  append(*s, "created",
         Json{{"session_id", id}, {"mode", to_string(mode)}, {"env_set_id", set_id}, {"theta_star_id", theta_id},
              {"slots", slots}});
  return view(*s);
}

Json DesignService::get_session(const std::string& id) {
  auto s = find(id);
  std::lock_guard lock(s->m);
  return view(*s);
}

Json DesignService::get_environments(const std::string& set_id) {
  auto envs = env_set(set_id);
  Json list = Json::array();
  for (const auto& e : envs->set.environments) list.push_back(environment_to_json(e));
  Json out{{"set_id", set_id}, {"environments", list}};
  if (!envs->test_set_id.empty()) out["test_set"] = envs->test_set_id;
  return out;
}

Json DesignService::preview(const std::string& id, const Json& body) {
  check_body(body, {"env_id", "weights"}, {}, "preview");
  auto s = find(id);
  std::lock_guard lock(s->m);
  if (s->state.status != SessionStatus::Designing) {
    fail(ErrorKind::Conflict, "session " + id + " is " + to_string(s->state.status) + ", not designing");
  }
  const auto env_id = string_field(body, "env_id", "preview");
  const GridEnvironment& env = s->envs->env(env_id);
  if (s->state.mode == DesignMode::Independent && s->state.finalized.count(env_id)) {
    fail(ErrorKind::Conflict, "environment " + env_id + " is already finalized");
  }
  const RewardParams w = weights_in_box(body, env.k(), default_inference_.box, "preview");
  const PlanResult plan = plan_with_features(env, w);
  std::size_t idx = 0;
  while (s->envs->set.environments[idx].id() != env_id) ++idx;
  const bool match = plan.trajectory == s->targets[idx];
  append(*s, "preview", Json{{"env_id", env_id}, {"weights", w.weights}, {"matches_target", match}});
  return Json{{"env_id", env_id},
              {"trajectory", trajectory_to_json(plan.trajectory)},
              {"features", plan.features.phi},
              {"matches_target", match}};
}

Json DesignService::finalize(const std::string& id, const Json& body) {
  check_body(body, {"weights"}, {"env_id"}, "finalize");
  auto s = find(id);
  std::lock_guard lock(s->m);
  if (s->state.status != SessionStatus::Designing) {
    fail(ErrorKind::Conflict, "session " + id + " is " + to_string(s->state.status) + ", not designing");
  }
  std::string slot;
  const bool has_env = body.contains("env_id") && !body.at("env_id").is_null();
  if (s->state.mode == DesignMode::Joint) {
    if (has_env && string_field(body, "env_id", "finalize") != kJointSlot) {
      fail(ErrorKind::Validation, "finalize: joint sessions take a single proxy without env_id");
    }
    slot = kJointSlot;
  } else {
    if (!has_env) fail(ErrorKind::Validation, "finalize: independent sessions need env_id");
    slot = string_field(body, "env_id", "finalize");
    s->envs->env(slot);
  }
  if (s->state.finalized.count(slot)) fail(ErrorKind::Conflict, "slot " + slot + " is already finalized");
  const std::size_t k = s->envs->set.environments.front().k();
  const RewardParams w = weights_in_box(body, k, default_inference_.box, "finalize");
  append(*s, "finalized", Json{{"slot", slot}, {"weights", w.weights}});
  return view(*s);
}

Json DesignService::infer(const std::string& id, const Json& body) {
  check_body(body, {}, {"config"}, "infer");
  InferenceConfig config = default_inference_;
  if (body.contains("config")) {
    try {
      config = inference_config_from_json(body.at("config"), default_inference_);
    } catch (const Json::exception& e) {
      fail(ErrorKind::Validation, std::string("infer: config: ") + e.what());
    }
  }
  config.validate();
  auto s = find(id);
  std::lock_guard lock(s->m);
  const auto& st = s->state;
  if (st.status == SessionStatus::Done) fail(ErrorKind::Conflict, "session " + id + " is already done");
  if (st.job_running) fail(ErrorKind::Conflict, "session " + id + " already has inference running");
  if (st.finalized.size() != st.slots.size()) {
    fail(ErrorKind::Conflict, "session " + id + " still has unfinalized proxies");
  }
  append(*s, "inference_started", Json{{"config", inference_config_to_json(config)}});
  if (s->job.joinable()) s->job.join();
  s->job = std::thread([this, s, config] { run_job(s, config); });
  return view(*s);
}

void DesignService::run_job(std::shared_ptr<Session> s, InferenceConfig config) {
  Json result;
  std::string error;
  try {
    std::map<std::string, RewardParams> proxies;
    {
      std::lock_guard lock(s->m);
      proxies = s->state.finalized;
    }
    const auto& envs = s->envs->set.environments;
    const auto& test = s->envs->test;
    result["mode"] = to_string(s->state.mode);
    result["inference_config"] = inference_config_to_json(config);
    result["test_environments"] = test.size();
    if (s->state.mode == DesignMode::Independent) {
      std::vector<ProxyObservation> obs;
      for (const auto& e : envs) obs.push_back(make_observation(e, proxies.at(e.id())));
      const auto samples = infer_independent(envs, obs, config);
      const RewardParams mean = posterior_mean(samples);
      result["posterior"] = posterior_summary(samples);
      result["mean"] = mean.weights;
      result["regret nominal"] = average_regret(test, mean, s->theta_star);
    } else {
      const RewardParams& proxy = proxies.at(kJointSlot);
      const JointProxyObservation joint = make_joint_observation(envs, proxy);
      const auto samples = infer_joint_augmented(envs, joint, config);
      const RewardParams mean = posterior_mean(samples);
      result["posterior"] = posterior_summary(samples);
      result["mean"] = mean.weights;
      result["regret nominal"] = average_regret(test, proxy, s->theta_star);
      result["regret IRD-augmented"] = average_regret(test, mean, s->theta_star);
    }
    result["theta_star"] = s->theta_star.weights;
  } catch (const std::exception& e) {
    error = e.what();
  }
  std::lock_guard lock(s->m);
  try {
    if (error.empty()) {
      append(*s, "inference_done", Json{{"result", result}});
    } else {
      append(*s, "inference_failed", Json{{"error", error}});
    }
  } catch (const std::exception&) {
    s->state.job_running = false;
  }
  s->idle.notify_all();
}

Json DesignService::result(const std::string& id) {
  auto s = find(id);
  std::lock_guard lock(s->m);
  const auto& st = s->state;
  Json out{{"session_id", id}, {"status", to_string(st.status)}, {"job_running", st.job_running}};
  if (st.status == SessionStatus::Done) out["result"] = st.result;
  if (st.error) out["error"] = *st.error;
  return out;
}

void DesignService::wait_idle(const std::string& id) {
  auto s = find(id);
  std::unique_lock lock(s->m);
  s->idle.wait(lock, [&] { return !s->state.job_running; });
}

}  // namespace ird
