#pragma once

#include <cstdlib>
#include <string>

#include "httplib.h"
#include "partid/service.hpp"

namespace partid::server {

inline constexpr const char* kPortEnv = "PARTID_PORT";
inline constexpr int kDefaultPort = 8080;

/// Port from PARTID_PORT, else kDefaultPort.
inline int default_port() {
  if (const char* env = std::getenv(kPortEnv)) {
    try {
      const int p = std::stoi(env);
      if (p > 0 && p < 65536) return p;
    } catch (const std::exception&) {
    }
  }
  return kDefaultPort;
}

inline void register_routes(httplib::Server& srv) {
  auto route = [&srv](const char* path, service::json (*handler)(const service::json&)) {
    srv.Post(path, [handler](const httplib::Request& req, httplib::Response& res) {
      const auto r = service::handle(req.body, handler);
      res.status = r.status;
      res.set_content(r.body.dump(), "application/json");
    });
  };
  route("/v1/region", &service::region);
  route("/v1/decide", &service::decide);
  route("/v1/treatment", &service::treatment);
  route("/v1/sweep", &service::sweep);
  route("/v1/poll-audit", &service::poll_audit);
  route("/v1/simulate", &service::simulate);
  srv.Get("/v1/health", [](const httplib::Request&, httplib::Response& res) {
    res.set_content(service::health().dump(), "application/json");
  });
}

}  // namespace partid::server
