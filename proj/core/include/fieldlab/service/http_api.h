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
#ifndef FIELDLAB_SERVICE_HTTP_API_H
#define FIELDLAB_SERVICE_HTTP_API_H

#include "fieldlab/service/session_manager.h"

#include <memory>

namespace fieldlab::service
{

/**
 * HTTP+JSON front end:
 *   POST /sessions, GET /sessions/{id}/state, POST /sessions/{id}/decisions,
 *   GET /sessions/{id}/summary, GET /export, GET /healthz,
 * plus the static console files when a static directory is configured.
 */
class HttpServer
{
public:
    explicit HttpServer(SessionManager& manager);
    ~HttpServer();

    /// Binds host:port (port 0 picks a free one) and returns the bound port.
    int bind(const std::string& host, int port);
    /// Serves until stop(); blocks the calling thread.
    void listen();
    void stop();
    bool running() const;

private:
    struct Impl;
    std::unique_ptr<Impl> m_impl;
};

/// Binds, then serves until stopped.
void serve(SessionManager& manager);

} // namespace fieldlab::service

#endif // FIELDLAB_SERVICE_HTTP_API_H
