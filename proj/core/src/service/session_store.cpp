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
#include "fieldlab/service/session_store.h"
#include "fieldlab/errors.h"

#include <fmt/format.h>
#include <json.hpp>

#include <fcntl.h>
#include <unistd.h>

#include <cctype>
#include <cerrno>
#include <cstring>
#include <fstream>
#include <map>
#include <sstream>

namespace fieldlab::service
{

std::string_view to_string(SessionStatus s)
{
    switch (s) {
    case SessionStatus::Active:
        return "active";
    case SessionStatus::Complete:
        return "complete";
    case SessionStatus::Abandoned:
        return "abandoned";
    }
    return "?";
}

namespace
{

[[noreturn]] void io_error(const std::string& what, const std::filesystem::path& path)
{
    throw DataError(fmt::format("{} {}: {}", what, path.string(), std::strerror(errno)));
}

void sync_directory(const std::filesystem::path& dir)
{
    const int fd = ::open(dir.c_str(), O_RDONLY | O_DIRECTORY);
    if (fd < 0) {
        io_error("cannot open directory", dir);
    }
    ::fsync(fd);
    ::close(fd);
}

/// Complete lines of the file; a torn last line is cut from the file.
std::vector<std::string> read_lines_repairing(const std::filesystem::path& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        return {};
    }
    std::ostringstream ss;
    ss << in.rdbuf();
    const std::string text = ss.str();
    in.close();
    const auto end = text.rfind('\n');
    const std::size_t keep = end == std::string::npos ? 0 : end + 1;
    if (keep < text.size()) {
        std::filesystem::resize_file(path, keep);
    }
    std::vector<std::string> lines;
    std::size_t start = 0;
    while (start < keep) {
        const auto nl = text.find('\n', start);
        if (nl > start) {
            lines.push_back(text.substr(start, nl - start));
        }
        start = nl + 1;
    }
    return lines;
}

nlohmann::ordered_json kernel_json(const TransmissionKernel& k)
{
    return {{"distance_scale", k.distance_scale()}, {"damping", k.damping()}};
}

bool valid_id(const std::string& id)
{
    if (id.empty() || id.size() > 64) {
        return false;
    }
    for (char c : id) {
        if (!(std::isalnum(static_cast<unsigned char>(c)) || c == '-' || c == '_')) {
            return false;
        }
    }
    return true;
}

} // namespace

void append_durably(const std::filesystem::path& path, const std::string& line)
{
    const int fd = ::open(path.c_str(), O_WRONLY | O_APPEND | O_CREAT | O_CLOEXEC, 0644);
    if (fd < 0) {
        io_error("cannot open", path);
    }
    const char* data = line.data();
    std::size_t left = line.size();
    while (left > 0) {
        const ssize_t n = ::write(fd, data, left);
        if (n < 0) {
            if (errno == EINTR) {
                continue;
            }
            ::close(fd);
            io_error("write failed on", path);
        }
        data += n;
        left -= static_cast<std::size_t>(n);
    }
    if (::fsync(fd) != 0) {
        ::close(fd);
        io_error("fsync failed on", path);
    }
    ::close(fd);
}

SessionStore::SessionStore(std::filesystem::path dir)
    : m_dir(std::move(dir))
{
    std::filesystem::create_directories(m_dir / "sessions");
}

std::filesystem::path SessionStore::log_path(const std::string& session_id) const
{
    if (!valid_id(session_id)) {
        throw DataError(fmt::format("invalid session id '{}'", session_id));
    }
    return m_dir / "sessions" / (session_id + ".ndjson");
}

std::vector<IndexEntry> SessionStore::load_index()
{
    std::lock_guard lock(m_index_mutex);
    std::vector<IndexEntry> entries;
    std::map<std::string, std::size_t> by_id;
    for (const auto& line : read_lines_repairing(m_dir / "index.ndjson")) {
        try {
            const auto j     = nlohmann::json::parse(line);
            const auto event = j.at("event").get<std::string>();
            const auto id    = j.at("session_id").get<std::string>();
            if (event == "created") {
                IndexEntry e;
                e.meta.session_id = id;
                e.meta.cohort     = j.at("cohort").get<std::string>();
                e.meta.design     = parse_design(j.at("design").get<std::string>());
                e.meta.seed       = j.at("seed").get<std::uint64_t>();
                e.meta.kernel     = TransmissionKernel(j.at("kernel").at("distance_scale").get<double>(),
                                                       j.at("kernel").at("damping").get<TransmissionKernel::DampingTable>());
                if (!j.at("rate_override").is_null()) {
                    e.meta.rate_override = j.at("rate_override").get<double>();
                }
                e.meta.created_ms = j.at("created_ms").get<std::int64_t>();
                by_id[id]         = entries.size();
                entries.push_back(std::move(e));
            }
            else if (event == "status") {
                const auto it = by_id.find(id);
                if (it == by_id.end()) {
                    throw DataError(fmt::format("status for unknown session {}", id));
                }
                const auto s = j.at("status").get<std::string>();
                entries[it->second].status = s == "abandoned" ? SessionStatus::Abandoned : SessionStatus::Active;
            }
            else {
                throw DataError(fmt::format("unknown index event '{}'", event));
            }
        }
        catch (const nlohmann::json::exception& e) {
            throw DataError(fmt::format("corrupt index line: {}", e.what()));
        }
    }
    return entries;
}

void SessionStore::create(const SessionMeta& meta)
{
    const auto path = log_path(meta.session_id);
    if (std::filesystem::exists(path)) {
        throw DataError(fmt::format("session {} already exists", meta.session_id));
    }
    LogHeader header;
    header.session_id = meta.session_id;
    header.cohort     = meta.cohort;
    header.design     = std::string(to_string(meta.design));
    header.seed       = meta.seed;
    append_durably(path, encode_header(header) + "\n");
    sync_directory(path.parent_path());

    nlohmann::ordered_json j;
    j["event"]         = "created";
    j["session_id"]    = meta.session_id;
    j["cohort"]        = meta.cohort;
    j["design"]        = to_string(meta.design);
    j["seed"]          = meta.seed;
    j["kernel"]        = kernel_json(meta.kernel);
    j["rate_override"] = meta.rate_override ? nlohmann::ordered_json(*meta.rate_override) : nullptr;
    j["created_ms"]    = meta.created_ms;
    std::lock_guard lock(m_index_mutex);
    append_durably(m_dir / "index.ndjson", j.dump() + "\n");
    sync_directory(m_dir);
}

void SessionStore::mark(const std::string& session_id, SessionStatus status, std::int64_t at_ms)
{
    nlohmann::ordered_json j;
    j["event"]      = "status";
    j["session_id"] = session_id;
    j["status"]     = to_string(status);
    j["at_ms"]      = at_ms;
    std::lock_guard lock(m_index_mutex);
    append_durably(m_dir / "index.ndjson", j.dump() + "\n");
}

void SessionStore::append(const std::string& session_id, const DecisionRecord& record)
{
    append_durably(log_path(session_id), encode_record(record) + "\n");
}

std::vector<DecisionRecord> SessionStore::read_records(const std::string& session_id)
{
    const auto path  = log_path(session_id);
    const auto lines = read_lines_repairing(path);
    std::vector<DecisionRecord> records;
    for (std::size_t i = 1; i < lines.size(); ++i) {
        records.push_back(decode_record(lines[i]));
    }
    return records;
}

} // namespace fieldlab::service
