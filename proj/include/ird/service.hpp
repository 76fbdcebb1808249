#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "ird/inference.hpp"
#include "ird/io.hpp"

namespace ird {

enum class DesignMode { Independent, Joint };
enum class SessionStatus { Designing, Inferring, Done };

std::string to_string(DesignMode m);
std::string to_string(SessionStatus s);

/// Slot name used for the single proxy of a joint session.
inline constexpr const char* kJointSlot = "joint";

struct SessionEvent {
  std::string type;  // created, preview, finalized, inference_started, inference_done, inference_failed
  double t = 0.0;    // seconds since the Unix epoch, monotone within a session
  Json data;
};

/// State rebuilt by folding a session's events in order.
struct SessionState {
  std::string session_id;
  DesignMode mode = DesignMode::Independent;
  std::string env_set_id;
  std::string theta_star_id;
  SessionStatus status = SessionStatus::Designing;
  std::vector<std::string> slots;  // environment ids, or the single joint slot
  double created_t = 0.0;
  std::map<std::string, std::size_t> preview_counts;  // per environment
  std::map<std::string, double> first_activity_t;     // per slot: first preview
  std::map<std::string, RewardParams> finalized;      // slot -> proxy
  std::map<std::string, double> finalized_t;
  bool job_running = false;
  std::optional<std::string> error;
  Json result;  // set when done

  void apply(const SessionEvent& e);
};

/// Directory layout under the data directory:
///   env_sets/<set_id>/manifest.json (+ one file per environment; an optional
///     "test_set" manifest key names the held-out set used for regret)
///   theta_stars/<id>.json
///   sessions/<session_id>.jsonl  (append-only event log)
class DesignService {
 public:
  DesignService(std::filesystem::path data_dir, InferenceConfig default_inference = {});
  ~DesignService();
  DesignService(const DesignService&) = delete;
  DesignService& operator=(const DesignService&) = delete;

  Json create_session(const Json& body);
  Json get_session(const std::string& id);
  Json get_environments(const std::string& set_id);
  Json preview(const std::string& id, const Json& body);
  Json finalize(const std::string& id, const Json& body);
  /// Starts inference in the background and returns immediately.
  Json infer(const std::string& id, const Json& body);
  Json result(const std::string& id);

  /// Blocks until the session has no running inference job.
  void wait_idle(const std::string& id);

  /// Folds a persisted log; used at startup and by the round-trip tests.
  static SessionState replay(const std::filesystem::path& log_file);

 private:
  struct Session;
  struct EnvSetCache;

  std::shared_ptr<Session> find(const std::string& id);
  std::shared_ptr<const EnvSetCache> env_set(const std::string& set_id);
  void append(Session& s, const std::string& type, Json data);
  Json view(const Session& s) const;
  void run_job(std::shared_ptr<Session> s, InferenceConfig config);

  std::filesystem::path data_dir_;
  InferenceConfig default_inference_;
  std::mutex mutex_;  // guards sessions_, env_sets_ and next_id_
  std::map<std::string, std::shared_ptr<Session>> sessions_;
  std::map<std::string, std::shared_ptr<const EnvSetCache>> env_sets_;
  std::uint64_t next_id_ = 1;
};

/// HTTP front end. `port` 0 binds an ephemeral port.
class HttpServer {
 public:
  HttpServer(DesignService& service, std::string host, int port);
  ~HttpServer();
  int port() const { return port_; }
  /// Serves on a background thread until stop().
  void start();
  /// Serves on the calling thread.
  void run();
  void stop();

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
  int port_ = 0;
  std::thread thread_;
};

}  // namespace ird
