#include "nutrisight/http_server.h"

#include <spdlog/spdlog.h>

#include "httplib.h"
#include "nutrisight/error.h"

namespace nutrisight::service {

namespace {

void send_json(httplib::Response& res, int status, const Json& body) {
  res.status = status;
  res.set_content(body.dump(), "application/json");
}

template <typename Fn>
void guarded(httplib::Response& res, Fn&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    const int status = http_status(e.kind());
    if (status >= 500) spdlog::error("request failed at stage '{}': {}", e.stage(), e.what());
    send_json(res, status, error_body(e));
  } catch (const std::exception& e) {
    spdlog::error("unexpected failure: {}", e.what());
    send_json(res, 500, error_body(Error(ErrorKind::kData, e.what(), "server")));
  }
}

std::optional<std::string> form_field(const httplib::Request& req, const std::string& key) {
  if (req.has_file(key)) return req.get_file_value(key).content;
  if (req.has_param(key)) return req.get_param_value(key);
  return std::nullopt;
}

}  // namespace

struct HttpServer::Impl {
  Service& service;
  HttpOptions options;
  httplib::Server server;
  int port = -1;

  Impl(Service& s, HttpOptions o) : service(s), options(std::move(o)) {}

  void routes() {
    server.set_default_headers({{"Access-Control-Allow-Origin", options.cors_origin},
                                {"Access-Control-Allow-Headers", "Content-Type, X-Admin-Token"},
                                {"Access-Control-Allow-Methods", "GET, POST, OPTIONS"}});
    server.Options(R"(/api/v1/.*)", [](const httplib::Request&, httplib::Response& res) { res.status = 204; });

    server.Get("/api/v1/health", [this](const httplib::Request&, httplib::Response& res) {
      guarded(res, [&] { send_json(res, 200, service.health()); });
    });

    server.Post("/api/v1/estimate", [this](const httplib::Request& req, httplib::Response& res) {
      guarded(res, [&] {
        if (!req.is_multipart_form_data()) {
          throw Error(ErrorKind::kValidation, "estimate expects multipart/form-data", "request");
        }
        EstimateRequest er;
        if (req.has_file("image")) {
          const auto& content = req.get_file_value("image").content;
          er.image.assign(content.begin(), content.end());
        }
        if (const auto age = form_field(req, "age_years")) {
          try {
            std::size_t used = 0;
            er.age_years = std::stod(*age, &used);
            if (used != age->size()) throw std::invalid_argument("trailing characters");
          } catch (const std::exception&) {
            throw Error(ErrorKind::kValidation, "age_years must be a number", "request");
          }
        }
        er.gender = form_field(req, "gender");
        er.device_id = form_field(req, "device_id").value_or("");
        er.activity_level = form_field(req, "activity_level").value_or("sedentary");
        send_json(res, 200, service.handle_estimate(er));
      });
    });

    server.Post(R"(/api/v1/records/([0-9A-Za-z_-]+)/plan)",
                [this](const httplib::Request& req, httplib::Response& res) {
                  guarded(res, [&] {
                    Json body;
                    try {
                      body = Json::parse(req.body);
                    } catch (const std::exception&) {
                      throw Error(ErrorKind::kValidation, "plan request body must be JSON", "request");
                    }
                    if (!body.is_object()) throw Error(ErrorKind::kValidation, "plan request must be an object", "request");
                    std::optional<int> weeks;
                    if (body.contains("weeks")) {
                      if (!body["weeks"].is_number_integer()) {
                        throw Error(ErrorKind::kValidation, "weeks must be an integer", "request");
                      }
                      weeks = body["weeks"].get<int>();
                    }
                    const auto text = [&](const char* key, const char* fallback) {
                      if (!body.contains(key)) return std::string(fallback);
                      if (!body[key].is_string()) {
                        throw Error(ErrorKind::kValidation, std::string(key) + " must be a string", "request");
                      }
                      return body[key].get<std::string>();
                    };
                    send_json(res, 200,
                              service.handle_plan(req.matches[1], text("diet_type", "balanced"), weeks,
                                                  text("activity_level", "sedentary")));
                  });
                });

    server.Get(R"(/api/v1/records/([0-9A-Za-z_-]+))", [this](const httplib::Request& req, httplib::Response& res) {
      guarded(res, [&] { send_json(res, 200, service.get_record(req.matches[1])); });
    });

    server.Post("/api/v1/admin/reload", [this](const httplib::Request& req, httplib::Response& res) {
      guarded(res, [&] {
        if (options.admin_token.empty() || req.get_header_value("X-Admin-Token") != options.admin_token) {
          Json body{{"stage", "admin"}, {"code", "unauthorized"}, {"message", "admin token required"}};
          send_json(res, 403, body);
          return;
        }
        service.reload_from_config();
        send_json(res, 200, service.health());
      });
    });
  }
};

HttpServer::HttpServer(Service& service, HttpOptions options)
    : impl_(std::make_unique<Impl>(service, std::move(options))) {
  impl_->routes();
}

HttpServer::~HttpServer() { stop(); }

int HttpServer::bind() {
  if (impl_->options.port == 0) {
    impl_->port = impl_->server.bind_to_any_port(impl_->options.host);
  } else {
    impl_->port = impl_->server.bind_to_port(impl_->options.host, impl_->options.port)
                      ? impl_->options.port
                      : -1;
  }
  if (impl_->port < 0) {
    fail(ErrorKind::kConfiguration,
         "cannot bind " + impl_->options.host + ":" + std::to_string(impl_->options.port));
  }
  return impl_->port;
}

void HttpServer::serve() {
  spdlog::info("listening on {}:{}", impl_->options.host, impl_->port);
  impl_->server.listen_after_bind();
}

void HttpServer::stop() {
  if (impl_) impl_->server.stop();
}

void HttpServer::wait_until_ready() const { impl_->server.wait_until_ready(); }

}  // namespace nutrisight::service
