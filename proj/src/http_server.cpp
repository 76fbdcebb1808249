#include <httplib.h>

#include "ird/error.hpp"
#include "ird/service.hpp"

namespace ird {
namespace {

int http_status(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::InputDomain:
    case ErrorKind::Validation:
    case ErrorKind::Config: return 400;
    case ErrorKind::NotFound: return 404;
    case ErrorKind::Conflict: return 409;
    case ErrorKind::Budget: return 422;
    case ErrorKind::Planning:
    case ErrorKind::Io: return 500;
  }
  return 500;
}

void send_json(httplib::Response& res, int status, const Json& body) {
  res.status = status;
  res.set_content(body.dump(), "application/json");
}

void send_error(httplib::Response& res, int status, const std::string& code, const std::string& message) {
  send_json(res, status, Json{{"error", {{"code", code}, {"message", message}}}});
}

Json parse_body(const httplib::Request& req) {
  if (req.body.empty()) return Json::object();
  try {
    return Json::parse(req.body);
  } catch (const Json::exception& e) {
    fail(ErrorKind::Validation, std::string("request body is not valid JSON: ") + e.what());
  }
}

template <class F>
httplib::Server::Handler wrap(F f, int ok_status = 200) {
  return [f, ok_status](const httplib::Request& req, httplib::Response& res) {
    try {
      send_json(res, ok_status, f(req));
    } catch (const Error& e) {
      send_error(res, http_status(e.kind()), std::string(to_string(e.kind())), e.what());
    } catch (const std::exception& e) {
      send_error(res, 500, "internal_error", e.what());
    }
  };
}

}  // namespace

struct HttpServer::Impl {
  httplib::Server server;
};

HttpServer::HttpServer(DesignService& service, std::string host, int port) : impl_(std::make_unique<Impl>()) {
  auto& srv = impl_->server;
  DesignService* svc = &service;
  srv.Post("/sessions", wrap([svc](const httplib::Request& r) { return svc->create_session(parse_body(r)); }, 201));
  srv.Get(R"(/sessions/([^/]+))",
          wrap([svc](const httplib::Request& r) { return svc->get_session(r.matches[1].str()); }));
  srv.Get(R"(/environments/([^/]+))",
          wrap([svc](const httplib::Request& r) { return svc->get_environments(r.matches[1].str()); }));
  srv.Post(R"(/sessions/([^/]+)/preview)",
           wrap([svc](const httplib::Request& r) { return svc->preview(r.matches[1].str(), parse_body(r)); }));
  srv.Post(R"(/sessions/([^/]+)/finalize)",
           wrap([svc](const httplib::Request& r) { return svc->finalize(r.matches[1].str(), parse_body(r)); }));
  srv.Post(R"(/sessions/([^/]+)/infer)",
           wrap([svc](const httplib::Request& r) { return svc->infer(r.matches[1].str(), parse_body(r)); }, 202));
  srv.Get(R"(/sessions/([^/]+)/result)",
          wrap([svc](const httplib::Request& r) { return svc->result(r.matches[1].str()); }));
  srv.set_error_handler([](const httplib::Request&, httplib::Response& res) {
    if (res.body.empty()) send_error(res, res.status, "not_found", "no such endpoint");
  });
  if (port == 0) {
    port_ = srv.bind_to_any_port(host);
  } else {
    port_ = srv.bind_to_port(host, port) ? port : -1;
  }
  if (port_ < 0) fail(ErrorKind::Io, "cannot listen on " + host + ":" + std::to_string(port));
}

HttpServer::~HttpServer() { stop(); }

void HttpServer::start() {
  thread_ = std::thread([this] { impl_->server.listen_after_bind(); });
  impl_->server.wait_until_ready();
}

void HttpServer::run() { impl_->server.listen_after_bind(); }

void HttpServer::stop() {
  impl_->server.stop();
  if (thread_.joinable()) thread_.join();
}

}  // namespace ird
