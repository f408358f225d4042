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
#ifndef FIELDLAB_SERVICE_SESSION_STORE_H
#define FIELDLAB_SERVICE_SESSION_STORE_H

#include "fieldlab/schedule.h"
#include "fieldlab/session_log.h"

#include <cstdint>
#include <filesystem>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

namespace fieldlab::service
{

enum class SessionStatus
{
    Active,
    Complete,
    Abandoned,
};

std::string_view to_string(SessionStatus s);

/// Everything needed to rebuild a session from its decisions.
struct SessionMeta {
    std::string session_id;
    std::string cohort;
    ScheduleDesign design = ScheduleDesign::FullFactorial;
    std::uint64_t seed    = 0;
    TransmissionKernel kernel = default_kernel();
    std::optional<double> rate_override;
    std::int64_t created_ms = 0;
};

struct IndexEntry {
    SessionMeta meta;
    /// Last status written to the index; Active unless marked abandoned.
    SessionStatus status = SessionStatus::Active;
};

/**
 * Append-only persistence.
 *
 * `index.ndjson` holds one line per created session and per status change;
 * `sessions/<id>.ndjson` is a decision log per session. Every append is
 * flushed to disk before it returns. A torn final line, left by a crash in
 * the middle of an unacknowledged write, is cut off when the file is read.
 */
class SessionStore
{
public:
    explicit SessionStore(std::filesystem::path dir);

    const std::filesystem::path& dir() const
    {
        return m_dir;
    }

    std::vector<IndexEntry> load_index();
    /// Writes the session's log header and its index line.
    void create(const SessionMeta& meta);
    void mark(const std::string& session_id, SessionStatus status, std::int64_t at_ms);
    void append(const std::string& session_id, const DecisionRecord& record);
    std::vector<DecisionRecord> read_records(const std::string& session_id);

private:
    std::filesystem::path log_path(const std::string& session_id) const;

    std::filesystem::path m_dir;
    std::mutex m_index_mutex;
};

/// Writes the line and flushes file data to disk.
void append_durably(const std::filesystem::path& path, const std::string& line);

} // namespace fieldlab::service

#endif // FIELDLAB_SERVICE_SESSION_STORE_H
