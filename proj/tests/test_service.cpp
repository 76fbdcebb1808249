#include <doctest.h>
#include <httplib.h>

#include <atomic>
#include <filesystem>
#include <functional>
#include <thread>

#include "ird/error.hpp"
#include "ird/service.hpp"
#include "oracles.hpp"

using namespace ird;
namespace fs = std::filesystem;

namespace {

const RewardParams kThetaStar{{-0.123456789, -0.987654321}};

GridEnvironment lava() { return oracle::terrain_env({"010", "010", "000"}, 2, {0, 0}, {0, 2}, 9, "lava"); }

InferenceConfig quick_config() {
  InferenceConfig c;
  c.mc_samples = 200;
  c.chain_length = 4000;
  c.burn_in = 1000;
  c.thinning = 3;
  c.seed = 5;
  return c;
}

struct DataDir {
  fs::path root;

  explicit DataDir(const std::string& name) : root(fs::temp_directory_path() / ("ird-service-" + name)) {
    fs::remove_all(root);
    const std::vector<GridEnvironment> train{
        lava(), oracle::terrain_env({"001", "110", "000"}, 2, {0, 0}, {2, 2}, 9, "t1"),
        oracle::terrain_env({"000", "111", "000"}, 2, {0, 0}, {2, 0}, 9, "t2"),
        oracle::terrain_env({"010", "001", "100"}, 2, {2, 2}, {0, 0}, 9, "t3"),
        oracle::terrain_env({"011", "000", "110"}, 2, {0, 2}, {2, 0}, 9, "t4")};
    const std::vector<GridEnvironment> test{oracle::terrain_env({"0110", "0010", "0000"}, 2, {0, 0}, {0, 3}, 12, "h0"),
                                            oracle::terrain_env({"0000", "1111", "0000"}, 2, {0, 0}, {2, 3}, 12, "h1"),
                                            oracle::terrain_env({"0101", "1010", "0101"}, 2, {0, 0}, {2, 3}, 12, "h2")};
    write_environment_set(root / "env_sets" / "train", "train", train, Json{{"test_set", "held"}});
    write_environment_set(root / "env_sets" / "held", "held", test);
    write_environment_set(root / "env_sets" / "orphan", "orphan", test);
    write_theta_file(root / "theta_stars" / "ts.json", kThetaStar);
    write_theta_file(root / "theta_stars" / "bad-k.json", RewardParams{{0.1, 0.2, 0.3}});
  }
  ~DataDir() { fs::remove_all(root); }
};

Json weights(const RewardParams& w) { return Json(w.weights); }

ErrorKind kind_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.kind();
  }
  FAIL("expected an error");
  return ErrorKind::Io;
}

// True when any number in `j` equals a theta* component or a key names it.
bool leaks_theta(const Json& j) {
  if (j.is_number()) {
    const double v = j.get<double>();
    return v == kThetaStar[0] || v == kThetaStar[1];
  }
  if (j.is_object()) {
    for (const auto& [key, value] : j.items()) {
      if (key == "theta_star" || leaks_theta(value)) return true;
    }
  }
  if (j.is_array()) {
    for (const auto& v : j) {
      if (leaks_theta(v)) return true;
    }
  }
  return false;
}

Json create(DesignService& svc, const std::string& mode) {
  return svc.create_session(Json{{"mode", mode}, {"env_set_id", "train"}, {"theta_star_id", "ts"}});
}

}  // namespace

TEST_CASE("sessions: creation, pending slots and resource errors") {
  DataDir dir("create");
  DesignService svc(dir.root, quick_config());
  const auto a = create(svc, "independent");
  CHECK(a["status"] == "designing");
  CHECK(a["pending"].size() == 5);
  CHECK(a["environments"].size() == 5);
  CHECK(a["environments"][0]["target_trajectory"] == trajectory_to_json(plan_optimal(lava(), kThetaStar)));
  const auto b = create(svc, "joint");
  CHECK(b["pending"] == Json::array({"joint"}));
  CHECK(a["session_id"] != b["session_id"]);
  CHECK(create(svc, "joint")["session_id"] != b["session_id"]);

  CHECK(kind_of([&] { svc.create_session(Json{{"mode", "joint"}, {"env_set_id", "nope"}, {"theta_star_id", "ts"}}); }) ==
        ErrorKind::NotFound);
  CHECK(kind_of([&] { svc.create_session(Json{{"mode", "joint"}, {"env_set_id", "train"}, {"theta_star_id", "x"}}); }) ==
        ErrorKind::NotFound);
  CHECK(kind_of([&] {
          svc.create_session(Json{{"mode", "joint"}, {"env_set_id", "train"}, {"theta_star_id", "bad-k"}});
        }) == ErrorKind::Validation);
  CHECK(kind_of([&] {
          svc.create_session(Json{{"mode", "joint"}, {"env_set_id", "orphan"}, {"theta_star_id", "ts"}});
        }) == ErrorKind::Validation);
  CHECK(kind_of([&] { svc.create_session(Json{{"mode", "solo"}, {"env_set_id", "train"}, {"theta_star_id", "ts"}}); }) ==
        ErrorKind::Validation);
  CHECK(kind_of([&] { svc.create_session(Json{{"mode", "joint"}, {"env_set_id", "../x"}, {"theta_star_id", "ts"}}); }) ==
        ErrorKind::Validation);
  CHECK(kind_of([&] { svc.create_session(Json{{"mode", "joint"}, {"env_set_id", "train"}}); }) == ErrorKind::Validation);
  CHECK(kind_of([&] { svc.get_session("s-999"); }) == ErrorKind::NotFound);
  CHECK(svc.get_environments("train")["environments"].size() == 5);
}

TEST_CASE("preview reports target matches and validates weights") {
  DataDir dir("preview");
  DesignService svc(dir.root, quick_config());
  const std::string id = create(svc, "independent")["session_id"];
  for (const char* env : {"lava", "t1", "t2", "t3", "t4"}) {
    CHECK(svc.preview(id, Json{{"env_id", env}, {"weights", weights(kThetaStar)}})["matches_target"] == true);
    CHECK(svc.preview(id, Json{{"env_id", env}, {"weights", weights(scaled(kThetaStar, 0.5))}})["matches_target"] ==
          true);
  }
  // The zero-weight plan differs from the lava detour target, as enumeration confirms.
  const auto paths = oracle::enumerate_paths(lava());
  REQUIRE(oracle::first_best(paths, RewardParams{{0.0, 0.0}}).trajectory != plan_optimal(lava(), kThetaStar));
  CHECK(svc.preview(id, Json{{"env_id", "lava"}, {"weights", {0.0, 0.0}}})["matches_target"] == false);

  try {
    svc.preview(id, Json{{"env_id", "lava"}, {"weights", {1.5, -2.0}}});
    FAIL("expected a validation error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::Validation);
    CHECK(std::string(e.what()).find("weights[0]=1.5") != std::string::npos);
    CHECK(std::string(e.what()).find("weights[1]=-2") != std::string::npos);
  }
  CHECK(kind_of([&] { svc.preview(id, Json{{"env_id", "zz"}, {"weights", {0.0, 0.0}}}); }) == ErrorKind::NotFound);
  CHECK(kind_of([&] { svc.preview(id, Json{{"env_id", "lava"}, {"weights", {0.0}}}); }) == ErrorKind::Validation);
  CHECK(kind_of([&] { svc.preview(id, Json{{"env_id", "lava"}, {"weights", {0.0, 0.0}}, {"x", 1}}); }) ==
        ErrorKind::Validation);
  CHECK(svc.get_session(id)["environments"][0]["previews"] == 3);
}

TEST_CASE("finalize is terminal and completes the session") {
  DataDir dir("finalize");
  DesignService svc(dir.root, quick_config());
  const std::string id = create(svc, "independent")["session_id"];
  CHECK(kind_of([&] { svc.infer(id, Json::object()); }) == ErrorKind::Conflict);
  svc.finalize(id, Json{{"env_id", "lava"}, {"weights", weights(kThetaStar)}});
  CHECK(kind_of([&] { svc.finalize(id, Json{{"env_id", "lava"}, {"weights", {0.0, 0.0}}}); }) == ErrorKind::Conflict);
  CHECK(kind_of([&] { svc.preview(id, Json{{"env_id", "lava"}, {"weights", {0.0, 0.0}}}); }) == ErrorKind::Conflict);
  CHECK(kind_of([&] { svc.finalize(id, Json{{"weights", {0.0, 0.0}}}); }) == ErrorKind::Validation);
  Json v;
  for (const char* env : {"t1", "t2", "t3", "t4"}) v = svc.finalize(id, Json{{"env_id", env}, {"weights", weights(kThetaStar)}});
  CHECK(v["status"] == "inferring");
  CHECK(v["pending"].empty());
  CHECK(v["slots"][0]["design_seconds"].get<double>() >= 0.0);

  const std::string joint = create(svc, "joint")["session_id"];
  CHECK(svc.finalize(joint, Json{{"weights", {0.1, -0.4}}})["status"] == "inferring");
  CHECK(kind_of([&] { svc.finalize(joint, Json{{"weights", {0.1, -0.4}}}); }) == ErrorKind::Conflict);
}

TEST_CASE("inference results, regret fields and determinism") {
  DataDir dir("infer");
  DesignService svc(dir.root, quick_config());
  std::vector<std::string> ids;
  for (int rep = 0; rep < 2; ++rep) {
    const std::string id = create(svc, "independent")["session_id"];
    for (const char* env : {"lava", "t1", "t2", "t3", "t4"}) {
      svc.finalize(id, Json{{"env_id", env}, {"weights", weights(kThetaStar)}});
    }
    CHECK(svc.infer(id, Json::object())["status"] == "inferring");
    svc.wait_idle(id);
    ids.push_back(id);
  }
  const auto r0 = svc.result(ids[0]), r1 = svc.result(ids[1]);
  REQUIRE(r0["status"] == "done");
  CHECK(r0["result"] == r1["result"]);
  CHECK(r0["result"]["regret nominal"].get<double>() >= 0.0);
  CHECK(r0["result"]["regret nominal"].get<double>() <= 0.5);
  CHECK(r0["result"]["theta_star"] == weights(kThetaStar));
  CHECK(kind_of([&] { svc.infer(ids[0], Json::object()); }) == ErrorKind::Conflict);

  const std::string joint = create(svc, "joint")["session_id"];
  svc.finalize(joint, Json{{"weights", weights(kThetaStar)}});
  svc.infer(joint, Json{{"config", {{"seed", 9}}}});
  svc.wait_idle(joint);
  const auto rj = svc.result(joint)["result"];
  CHECK(rj["regret nominal"] == 0.0);
  CHECK(rj.contains("regret IRD-augmented"));
  CHECK(rj["inference_config"]["seed"] == 9);
}

TEST_CASE("no response reveals theta* before the session is done") {
  DataDir dir("hiding");
  DesignService svc(dir.root, quick_config());
  std::vector<Json> responses;
  const Json created = create(svc, "joint");
  responses.push_back(created);
  const std::string id = created["session_id"];
  responses.push_back(svc.get_environments("train"));
  responses.push_back(svc.preview(id, Json{{"env_id", "t1"}, {"weights", {0.5, 0.5}}}));
  responses.push_back(svc.get_session(id));
  responses.push_back(svc.finalize(id, Json{{"weights", {0.5, -0.5}}}));
  responses.push_back(svc.result(id));
  responses.push_back(svc.infer(id, Json::object()));
  for (const auto& r : responses) CHECK_FALSE(leaks_theta(r));
  svc.wait_idle(id);
  CHECK(leaks_theta(svc.result(id)));
  CHECK_FALSE(leaks_theta(svc.get_session(id)));
}

TEST_CASE("replaying the event log reconstructs the session") {
  DataDir dir("replay");
  Json before;
  std::string id;
  {
    DesignService svc(dir.root, quick_config());
    id = create(svc, "independent")["session_id"];
    svc.preview(id, Json{{"env_id", "t2"}, {"weights", {0.3, 0.1}}});
    svc.preview(id, Json{{"env_id", "t2"}, {"weights", {0.3, -0.1}}});
    svc.finalize(id, Json{{"env_id", "t2"}, {"weights", {0.3, -0.1}}});
    before = svc.get_session(id);
    const auto state = DesignService::replay(dir.root / "sessions" / (id + ".jsonl"));
    CHECK(state.preview_counts.at("t2") == 2);
    CHECK(state.finalized.at("t2") == RewardParams{{0.3, -0.1}});
    CHECK(state.status == SessionStatus::Designing);
  }
  DesignService restarted(dir.root, quick_config());
  CHECK(restarted.get_session(id) == before);
  CHECK(create(restarted, "joint")["session_id"] != id);
}

TEST_CASE("concurrent previews on distinct sessions stay separate") {
  DataDir dir("concurrent");
  DesignService svc(dir.root, quick_config());
  const std::string a = create(svc, "joint")["session_id"], b = create(svc, "joint")["session_id"];
  std::atomic<int> errors{0};
  auto hammer = [&](const std::string& id, const char* env, int n) {
    for (int i = 0; i < n; ++i) {
      try {
        svc.preview(id, Json{{"env_id", env}, {"weights", {0.01 * (i % 50), -0.5}}});
      } catch (...) {
        ++errors;
      }
    }
  };
  std::thread t1(hammer, a, "t1", 120), t2(hammer, b, "t3", 80), t3(hammer, a, "t1", 30);
  t1.join();
  t2.join();
  t3.join();
  CHECK(errors == 0);
  const auto sa = DesignService::replay(dir.root / "sessions" / (a + ".jsonl"));
  const auto sb = DesignService::replay(dir.root / "sessions" / (b + ".jsonl"));
  CHECK(sa.preview_counts.at("t1") == 150);
  CHECK(sa.preview_counts.count("t3") == 0);
  CHECK(sb.preview_counts.at("t3") == 80);
}

TEST_CASE("HTTP API round trip") {
  DataDir dir("http");
  DesignService svc(dir.root, quick_config());
  HttpServer server(svc, "127.0.0.1", 0);
  server.start();
  httplib::Client cli("127.0.0.1", server.port());

  auto res = cli.Post("/sessions", R"({"mode":"joint","env_set_id":"train","theta_star_id":"ts"})", "application/json");
  REQUIRE(res);
  CHECK(res->status == 201);
  const std::string id = Json::parse(res->body)["session_id"];

  res = cli.Get("/sessions/" + id);
  CHECK(res->status == 200);
  res = cli.Get("/environments/train");
  CHECK(Json::parse(res->body)["environments"].size() == 5);

  res = cli.Post("/sessions/" + id + "/preview", R"({"env_id":"lava","weights":[-0.1,-1.0]})", "application/json");
  CHECK(res->status == 200);
  CHECK(Json::parse(res->body)["matches_target"] == true);

  res = cli.Post("/sessions/" + id + "/preview", "{not json", "application/json");
  CHECK(res->status == 400);
  const auto err = Json::parse(res->body);
  CHECK(err["error"]["code"] == "validation_error");
  CHECK(err["error"]["message"].is_string());

  res = cli.Get("/sessions/nope");
  CHECK(res->status == 404);
  CHECK(Json::parse(res->body)["error"]["code"] == "not_found");
  res = cli.Get("/bogus");
  CHECK(res->status == 404);

  res = cli.Post("/sessions/" + id + "/finalize", R"({"weights":[-0.1,-1.0]})", "application/json");
  CHECK(res->status == 200);
  res = cli.Post("/sessions/" + id + "/finalize", R"({"weights":[-0.1,-1.0]})", "application/json");
  CHECK(res->status == 409);
  CHECK(Json::parse(res->body)["error"]["code"] == "conflict");

  res = cli.Post("/sessions/" + id + "/infer", "{}", "application/json");
  CHECK(res->status == 202);
  Json result;
  for (int i = 0; i < 600; ++i) {
    result = Json::parse(cli.Get("/sessions/" + id + "/result")->body);
    if (result["status"] == "done") break;
    std::this_thread::sleep_for(std::chrono::milliseconds(20));
  }
  REQUIRE(result["status"] == "done");
  CHECK(result["result"].contains("regret nominal"));
  CHECK(result["result"].contains("regret IRD-augmented"));
  server.stop();
}
