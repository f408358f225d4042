/*
* Copyright (C) 2026 The fieldlab authors
*
* Licensed under the Apache License, Version 2.0 (the "License");
* you may not use this file except in compliance with the License.
* You may obtain a copy of the License at
*
*     http://www.apache.org/licenses/LICENSE-2.0
*
* Unless required by applicable law or agreed to in writing, software
* distributed under the License is distributed on an "AS IS" BASIS,
* WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
* See the License for the specific language governing permissions and
* limitations under the License.
*/
#include "fieldlab/service/http_api.h"
#include "fieldlab/text_config.h"

#include <fmt/format.h>
#include <httplib.h>
#include <json.hpp>

namespace fieldlab::service
{

struct HttpServer::Impl {
    explicit Impl(SessionManager& m)
        : manager(m)
    {
    }

    SessionManager& manager;
    httplib::Server server;
};

namespace
{

void send_error(httplib::Response& res, int status, const std::string& code, const std::string& message)
{
    nlohmann::ordered_json j;
    j["error"]   = code;
    j["message"] = message;
    res.status   = status;
    res.set_content(j.dump(), "application/json");
}

template <class F>
httplib::Server::Handler guarded(F f)
{
    return [f](const httplib::Request& req, httplib::Response& res) {
        try {
            f(req, res);
        }
        catch (const ServiceError& e) {
            send_error(res, e.status(), e.code(), e.what());
        }
        catch (const ParseError& e) {
            send_error(res, 400, "bad-request", e.what());
        }
        catch (const InvalidConfig& e) {
            send_error(res, 400, "bad-request", e.what());
        }
        catch (const std::exception& e) {
            send_error(res, 500, "internal", e.what());
        }
    };
}

std::optional<std::string> query(const httplib::Request& req, const char* key)
{
    if (!req.has_param(key)) {
        return std::nullopt;
    }
    return req.get_param_value(key);
}

ExportFilter export_filter(const httplib::Request& req)
{
    ExportFilter f;
    f.cohort = query(req, "cohort");
    if (auto d = query(req, "design")) {
        try {
            f.design = parse_design(*d);
        }
        catch (const Error&) {
            throw ServiceError(400, "unknown-design", fmt::format("unknown design '{}'", *d));
        }
    }
    if (auto v = query(req, "from_ms")) {
        f.from_ms = parse_integer(*v, "from_ms");
    }
    if (auto v = query(req, "to_ms")) {
        f.to_ms = parse_integer(*v, "to_ms");
    }
    if (auto v = query(req, "include_abandoned")) {
        f.include_abandoned = *v == "1" || *v == "true";
    }
    return f;
}

} // namespace

HttpServer::HttpServer(SessionManager& manager)
    : m_impl(std::make_unique<Impl>(manager))
{
    auto& s = m_impl->server;
    auto& m = m_impl->manager;

    s.Post("/sessions", guarded([&m](const httplib::Request& req, httplib::Response& res) {
               res.status = 201;
               res.set_content(m.create_session(req.body), "application/json");
           }));
    s.Get(R"(/sessions/([A-Za-z0-9_-]+)/state)", guarded([&m](const httplib::Request& req, httplib::Response& res) {
              res.set_content(m.state(req.matches[1]), "application/json");
          }));
    s.Post(R"(/sessions/([A-Za-z0-9_-]+)/decisions)",
           guarded([&m](const httplib::Request& req, httplib::Response& res) {
               res.set_content(m.submit_decision(req.matches[1], req.body), "application/json");
           }));
    s.Get(R"(/sessions/([A-Za-z0-9_-]+)/summary)", guarded([&m](const httplib::Request& req, httplib::Response& res) {
              res.set_content(m.summary(req.matches[1]), "application/json");
          }));
    s.Get("/export", guarded([&m](const httplib::Request& req, httplib::Response& res) {
              const auto format = query(req, "format").value_or("ndjson");
              if (format == "csv") {
                  res.set_content(m.export_logs(export_filter(req), ExportFormat::Csv), "text/csv");
              }
              else if (format == "ndjson") {
                  res.set_content(m.export_logs(export_filter(req), ExportFormat::Ndjson), "application/x-ndjson");
              }
              else {
                  throw ServiceError(400, "bad-request", fmt::format("unknown export format '{}'", format));
              }
          }));
    s.Get("/healthz", [](const httplib::Request&, httplib::Response& res) {
        res.set_content(R"({"status":"ok"})", "application/json");
    });
    if (const auto& dir = manager.config().static_dir) {
        s.set_mount_point("/", dir->string());
    }
}

HttpServer::~HttpServer()
{
    stop();
}

int HttpServer::bind(const std::string& host, int port)
{
    auto& s = m_impl->server;
    if (port == 0) {
        const int bound = s.bind_to_any_port(host);
        if (bound < 0) {
            throw DataError(fmt::format("cannot bind {}", host));
        }
        return bound;
    }
    if (!s.bind_to_port(host, port)) {
        throw DataError(fmt::format("cannot bind {}:{}", host, port));
    }
    return port;
}

void HttpServer::listen()
{
    m_impl->server.listen_after_bind();
}

void HttpServer::stop()
{
    if (m_impl) {
        m_impl->server.stop();
    }
}

bool HttpServer::running() const
{
    return m_impl->server.is_running();
}

void serve(SessionManager& manager)
{
    HttpServer server(manager);
    server.bind(manager.config().host, manager.config().port);
    server.listen();
}

} // namespace fieldlab::service
