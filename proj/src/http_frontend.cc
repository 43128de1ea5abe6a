// Copyright 2026 The TDP Authors. All rights reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <sstream>
#include <thread>

#include "httplib.h"
#include "tdp/dialog_service.h"

namespace tdp {

namespace {

using ojson = nlohmann::ordered_json;

constexpr const char* kJson = "application/json";

void SendError(httplib::Response& res, int status, const std::string& code,
               const std::string& message, const nlohmann::json& detail = nullptr) {
  ojson body;
  body["error"]["code"] = code;
  body["error"]["message"] = message;
  if (!detail.is_null()) body["error"]["detail"] = detail;
  res.status = status;
  res.set_content(body.dump(), kJson);
}

template <typename Fn>
void Handle(httplib::Response& res, Fn fn) {
  try {
    res.status = 200;
    res.set_content(fn().dump(), kJson);
  } catch (const ServiceError& e) {
    SendError(res, e.http_status(), e.code(), e.what(), e.detail());
  } catch (const ParseError& e) {
    nlohmann::json detail = nlohmann::json::object();
    if (e.offset() != ParseError::kNoOffset) detail["offset"] = e.offset();
    SendError(res, 400, "parse_error", e.what(), detail);
  } catch (const ValidationError& e) {
    SendError(res, 400, "validation_error", e.what());
  } catch (const nlohmann::json::exception& e) {
    SendError(res, 400, "bad_request", e.what());
  } catch (const Error& e) {
    SendError(res, 500, "internal_error", e.what());
  }
}

nlohmann::json Body(const httplib::Request& req) {
  if (req.body.empty()) return nlohmann::json::object();
  try {
    return nlohmann::json::parse(req.body);
  } catch (const nlohmann::json::parse_error& e) {
    throw ServiceError(400, "bad_json", e.what());
  }
}

}  // namespace

struct HttpFrontend::Impl {
  DialogService* service;
  std::string static_dir;
  httplib::Server server;
  std::thread thread;
};

HttpFrontend::HttpFrontend(DialogService& service, std::string static_dir)
    : impl_(std::make_unique<Impl>()) {
  impl_->service = &service;
  impl_->static_dir = std::move(static_dir);
  httplib::Server& srv = impl_->server;
  DialogService* svc = &service;

  srv.Post("/api/sessions", [svc](const httplib::Request& req, httplib::Response& res) {
    Handle(res, [&] { return svc->CreateSession(Body(req)); });
  });
  srv.Post(R"(/api/sessions/([0-9a-f]+)/messages)",
           [svc](const httplib::Request& req, httplib::Response& res) {
             Handle(res, [&] { return svc->PostMessage(req.matches[1], Body(req)); });
           });
  srv.Post(R"(/api/sessions/([0-9a-f]+)/rating)",
           [svc](const httplib::Request& req, httplib::Response& res) {
             Handle(res, [&] { return svc->PostRating(req.matches[1], Body(req)); });
           });
  srv.Get(R"(/api/sessions/([0-9a-f]+))",
          [svc](const httplib::Request& req, httplib::Response& res) {
            Handle(res, [&] { return svc->GetSession(req.matches[1]); });
          });
  srv.Get("/api/report", [svc](const httplib::Request&, httplib::Response& res) {
    Handle(res, [&] { return svc->Report(); });
  });
  srv.Get("/api/export", [svc](const httplib::Request& req, httplib::Response& res) {
    try {
      std::ostringstream out;
      svc->ExportTranscripts(out, req.get_param_value("agent_kind"));
      res.status = 200;
      res.set_content(out.str(), "application/x-ndjson");
    } catch (const Error& e) {
      SendError(res, 500, "internal_error", e.what());
    }
  });
  srv.set_error_handler([](const httplib::Request&, httplib::Response& res) {
    if (res.body.empty() && res.status == 404) {
      SendError(res, 404, "not_found", "no such route");
    }
  });
  if (!impl_->static_dir.empty()) srv.set_mount_point("/", impl_->static_dir);
}

HttpFrontend::~HttpFrontend() { Stop(); }

int HttpFrontend::Start(const std::string& host, int port) {
  httplib::Server& srv = impl_->server;
  int bound = port;
  if (port == 0) {
    bound = srv.bind_to_any_port(host);
  } else if (!srv.bind_to_port(host, port)) {
    bound = -1;
  }
  if (bound < 0) throw IoError("cannot bind " + host + ":" + std::to_string(port));
  impl_->thread = std::thread([&srv] { srv.listen_after_bind(); });
  srv.wait_until_ready();
  return bound;
}

void HttpFrontend::Run(const std::string& host, int port) {
  if (!impl_->server.listen(host, port)) {
    throw IoError("cannot serve on " + host + ":" + std::to_string(port));
  }
}

void HttpFrontend::Stop() {
  if (!impl_) return;
  impl_->server.stop();
  if (impl_->thread.joinable()) impl_->thread.join();
}

}  // namespace tdp
