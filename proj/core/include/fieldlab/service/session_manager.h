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
#ifndef FIELDLAB_SERVICE_SESSION_MANAGER_H
#define FIELDLAB_SERVICE_SESSION_MANAGER_H

#include "fieldlab/errors.h"
#include "fieldlab/service/service_config.h"
#include "fieldlab/service/session_store.h"

#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <shared_mutex>
#include <string>

namespace fieldlab::service
{

/// A request the service refuses, with its HTTP status and a short code.
class ServiceError : public Error
{
public:
    ServiceError(int status, std::string code, const std::string& message);

    int status() const
    {
        return m_status;
    }
    const std::string& code() const
    {
        return m_code;
    }

private:
    int m_status;
    std::string m_code;
};

/// In-memory state of one session.
struct LiveSession;

using Clock = std::function<std::int64_t()>;
/// Wall clock in milliseconds since the epoch.
std::int64_t system_clock_ms();

enum class ExportFormat
{
    Ndjson,
    Csv,
};

struct ExportFilter {
    std::optional<std::string> cohort;
    std::optional<ScheduleDesign> design;
    std::optional<std::int64_t> from_ms; ///< inclusive decision timestamp bounds
    std::optional<std::int64_t> to_ms;
    bool include_abandoned = false;
};

/**
 * Session orchestration behind the HTTP API. All bodies are JSON text.
 *
 * Operations on one session are serialized by its own mutex; operations on
 * distinct sessions run concurrently, and an export holds out every writer
 * while it copies the records. On construction every session of the store
 * is replayed from its decision log, including the responses of token
 * carrying decisions.
 */
class SessionManager
{
public:
    explicit SessionManager(ServiceConfig config, Clock clock = system_clock_ms);
    ~SessionManager();

    SessionManager(const SessionManager&)            = delete;
    SessionManager& operator=(const SessionManager&) = delete;

    /// {cohort, design, seed?} -> session and first observation.
    std::string create_session(const std::string& body);
    std::string state(const std::string& session_id);
    /// {action, token?, round?, month?} -> accepted record, outcome and next observation.
    std::string submit_decision(const std::string& session_id, const std::string& body);
    std::string summary(const std::string& session_id);
    std::string export_logs(const ExportFilter& filter, ExportFormat format = ExportFormat::Ndjson);

    /// Marks idle sessions abandoned; returns how many changed.
    int sweep_abandoned();

    const ServiceConfig& config() const
    {
        return m_config;
    }

private:
    std::shared_ptr<LiveSession> find(const std::string& session_id);
    void refresh(LiveSession& live, std::int64_t now);

    ServiceConfig m_config;
    Clock m_clock;
    SessionStore m_store;
    std::shared_mutex m_sessions_mutex;
    std::map<std::string, std::shared_ptr<LiveSession>> m_sessions;
    std::uint64_t m_created = 0;
};

} // namespace fieldlab::service

#endif // FIELDLAB_SERVICE_SESSION_MANAGER_H
