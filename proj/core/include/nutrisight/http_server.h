#pragma once

#include <memory>
#include <string>

#include "nutrisight/service.h"

namespace nutrisight::service {

struct HttpOptions {
  std::string host = "127.0.0.1";
  int port = 8080;  // 0 binds any free port
  std::string admin_token;  // empty disables /admin/reload
  std::string cors_origin = "*";
};

// /api/v1 endpoints over cpp-httplib:
//   POST /api/v1/estimate             multipart: image, age_years, gender, device_id, activity_level
//   POST /api/v1/records/{id}/plan    JSON: diet_type, weeks, activity_level
//   GET  /api/v1/records/{id}
//   GET  /api/v1/health
//   POST /api/v1/admin/reload         header X-Admin-Token
class HttpServer {
 public:
  HttpServer(Service& service, HttpOptions options);
  ~HttpServer();
  HttpServer(const HttpServer&) = delete;
  HttpServer& operator=(const HttpServer&) = delete;

  // Binds and returns the bound port; throws kConfiguration on failure.
  int bind();
  // Blocks until stop().
  void serve();
  void stop();
  void wait_until_ready() const;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace nutrisight::service
