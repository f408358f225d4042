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
#include "fieldlab/session_log.h"

#include <fmt/format.h>
#include <json.hpp>

#include <algorithm>
#include <fstream>
#include <istream>
#include <map>
#include <ostream>

namespace fieldlab
{

using ordered_json = nlohmann::ordered_json;

std::vector<double> SessionLog::round_payouts(int months, const EconomicsConstants& economics) const
{
    std::vector<double> payouts;
    std::size_t i = 0;
    while (i < records.size()) {
        const int round = records[i].round;
        std::size_t j   = i;
        while (j + 1 < records.size() && records[j + 1].round == round) {
            ++j;
        }
        const auto& last = records[j];
        if (last.infected_this_month) {
            payouts.push_back(-economics.infection_penalty);
        }
        else if (last.month >= months) {
            payouts.push_back(economics.survival_payout(BiosecurityLevel(last.level_after)));
        }
        i = j + 1;
    }
    return payouts;
}

double SessionLog::balance(int months, const EconomicsConstants& economics) const
{
    double total = 0.0;
    for (double p : round_payouts(months, economics)) {
        total += p;
    }
    return total;
}

int SessionLog::rounds_played() const
{
    int count = 0;
    int last  = -1;
    for (const auto& r : records) {
        if (r.round != last) {
            ++count;
            last = r.round;
        }
    }
    return count;
}

std::string encode_record(const DecisionRecord& r)
{
    ordered_json j;
    j["session_id"]       = r.session_id;
    j["cohort"]           = r.cohort;
    j["design"]           = to_string(r.design);
    j["round"]            = r.round;
    j["month"]            = r.month;
    j["infection_rate"]   = r.infection_rate;
    j["distribution"]     = to_string(r.distribution);
    j["visibility"]       = to_string(r.visibility);
    j["visible_infected"] = r.visible_infected ? ordered_json(*r.visible_infected) : ordered_json(nullptr);
    j["action"]           = to_string(r.action);
    j["level_after"]      = r.level_after;
    j["infected_this_month"] = r.infected_this_month;
    j["upgrade_ignored"]     = r.upgrade_ignored;
    j["token"]               = r.token ? ordered_json(*r.token) : ordered_json(nullptr);
    j["timestamp_ms"]        = r.timestamp_ms;
    return j.dump();
}

namespace
{

template <class T>
T require(const ordered_json& j, const char* key)
{
    auto it = j.find(key);
    if (it == j.end()) {
        throw ParseError(fmt::format("decision record lacks field '{}'", key));
    }
    try {
        return it->get<T>();
    }
    catch (const nlohmann::json::exception& e) {
        throw ParseError(fmt::format("decision record field '{}': {}", key, e.what()));
    }
}

template <class T>
std::optional<T> optional_field(const ordered_json& j, const char* key)
{
    auto it = j.find(key);
    if (it == j.end() || it->is_null()) {
        return std::nullopt;
    }
    try {
        return it->get<T>();
    }
    catch (const nlohmann::json::exception& e) {
        throw ParseError(fmt::format("field '{}': {}", key, e.what()));
    }
}

ordered_json parse_line(std::string_view line)
{
    try {
        auto j = ordered_json::parse(line.begin(), line.end());
        if (!j.is_object()) {
            throw ParseError("log line is not a JSON object");
        }
        return j;
    }
    catch (const nlohmann::json::exception& e) {
        throw ParseError(fmt::format("malformed log line: {}", e.what()));
    }
}

} // namespace

DecisionRecord decode_record(std::string_view line)
{
    const auto j = parse_line(line);
    DecisionRecord r;
    r.session_id       = require<std::string>(j, "session_id");
    r.cohort           = require<std::string>(j, "cohort");
    r.design           = parse_design(require<std::string>(j, "design"));
    r.round            = require<int>(j, "round");
    r.month            = require<int>(j, "month");
    r.infection_rate   = require<double>(j, "infection_rate");
    r.distribution     = parse_distribution(require<std::string>(j, "distribution"));
    r.visibility       = parse_visibility(require<std::string>(j, "visibility"));
    r.visible_infected = optional_field<int>(j, "visible_infected");
    r.action           = parse_action(require<std::string>(j, "action"));
    r.level_after      = require<int>(j, "level_after");
    r.infected_this_month = require<bool>(j, "infected_this_month");
    r.upgrade_ignored     = require<bool>(j, "upgrade_ignored");
    r.token               = optional_field<std::string>(j, "token");
    r.timestamp_ms        = require<std::int64_t>(j, "timestamp_ms");
    if (r.level_after < 0 || r.level_after > BiosecurityLevel::max_value || r.month < 1 || r.round < 1) {
        throw ParseError("decision record field out of range");
    }
    return r;
}

std::string encode_header(const LogHeader& h)
{
    ordered_json j;
    j["schema"]  = decision_log_schema;
    j["version"] = h.version;
    if (h.session_id) {
        j["session_id"] = *h.session_id;
    }
    if (h.cohort) {
        j["cohort"] = *h.cohort;
    }
    if (h.design) {
        j["design"] = *h.design;
    }
    if (h.seed) {
        j["seed"] = *h.seed;
    }
    if (h.policy) {
        j["policy"] = *h.policy;
    }
    return j.dump();
}

LogHeader decode_header(std::string_view line)
{
    const auto j = parse_line(line);
    if (optional_field<std::string>(j, "schema") != std::string(decision_log_schema)) {
        throw ParseError("not a fieldlab decision log");
    }
    LogHeader h;
    h.version = require<int>(j, "version");
    if (h.version != decision_log_version) {
        throw ParseError(fmt::format("unsupported decision-log version {}", h.version));
    }
    h.session_id = optional_field<std::string>(j, "session_id");
    h.cohort     = optional_field<std::string>(j, "cohort");
    h.design     = optional_field<std::string>(j, "design");
    h.seed       = optional_field<std::uint64_t>(j, "seed");
    h.policy     = optional_field<std::string>(j, "policy");
    return h;
}

void write_decision_log(std::ostream& out, std::span<const DecisionRecord> records, const LogHeader& header)
{
    out << encode_header(header) << '\n';
    for (const auto& r : records) {
        out << encode_record(r) << '\n';
    }
}

DecisionLogFile read_decision_log(std::istream& in)
{
    DecisionLogFile file;
    std::string line;
    if (!std::getline(in, line)) {
        throw ParseError("empty decision log");
    }
    file.header = decode_header(line);
    while (std::getline(in, line)) {
        if (line.empty()) {
            continue;
        }
        file.records.push_back(decode_record(line));
    }
    return file;
}

void write_decision_csv(std::ostream& out, std::span<const DecisionRecord> records)
{
    out << "session_id,cohort,design,round,month,infection_rate,distribution,visibility,visible_infected,"
           "action,level_after,infected_this_month,upgrade_ignored,token,timestamp_ms\n";
    for (const auto& r : records) {
        out << fmt::format("{},{},{},{},{},{},{},{},{},{},{},{},{},{},{}\n", r.session_id, r.cohort,
                           to_string(r.design), r.round, r.month, r.infection_rate, to_string(r.distribution),
                           to_string(r.visibility),
                           r.visible_infected ? std::to_string(*r.visible_infected) : std::string(),
                           to_string(r.action), r.level_after, r.infected_this_month ? 1 : 0,
                           r.upgrade_ignored ? 1 : 0, r.token.value_or(""), r.timestamp_ms);
    }
}

DecisionRecord make_decision_record(const SessionLog& session, int round, const RoundConfig& config,
                                    const MonthRecord& month)
{
    DecisionRecord r;
    r.session_id          = session.session_id;
    r.cohort              = session.cohort;
    r.design              = session.design;
    r.round               = round;
    r.month               = month.month;
    r.infection_rate      = config.infection_rate;
    r.distribution        = config.distribution;
    r.visibility          = config.visibility;
    r.visible_infected    = month.visible_infected;
    r.action              = month.action;
    r.level_after         = month.level_after.value();
    r.infected_this_month = month.infected_this_month;
    r.upgrade_ignored     = month.upgrade_ignored;
    return r;
}

std::vector<SessionLog> group_sessions(std::span<const DecisionRecord> records)
{
    std::map<std::string, SessionLog> by_id;
    for (const auto& r : records) {
        auto& s = by_id[r.session_id];
        if (s.records.empty()) {
            s.session_id = r.session_id;
            s.cohort     = r.cohort;
            s.design     = r.design;
        }
        s.records.push_back(r);
    }
    std::vector<SessionLog> sessions;
    sessions.reserve(by_id.size());
    for (auto& [id, s] : by_id) {
        std::stable_sort(s.records.begin(), s.records.end(), [](const DecisionRecord& a, const DecisionRecord& b) {
            return std::pair(a.round, a.month) < std::pair(b.round, b.month);
        });
        sessions.push_back(std::move(s));
    }
    return sessions;
}

void write_session_file(const std::filesystem::path& path, const SessionLog& session)
{
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) {
        throw DataError(fmt::format("cannot write {}", path.string()));
    }
    LogHeader header;
    header.session_id = session.session_id;
    header.cohort     = session.cohort;
    header.design     = std::string(to_string(session.design));
    header.seed       = session.seed;
    if (!session.policy.empty()) {
        header.policy = session.policy;
    }
    write_decision_log(out, session.records, header);
}

std::vector<SessionLog> read_log_file(const std::filesystem::path& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw DataError(fmt::format("cannot read {}", path.string()));
    }
    auto file     = read_decision_log(in);
    auto sessions = group_sessions(file.records);
    if (file.header.session_id) {
        // A session file: attach its metadata, even when it holds no records yet.
        if (sessions.empty()) {
            SessionLog empty;
            empty.session_id = *file.header.session_id;
            sessions.push_back(std::move(empty));
        }
        for (auto& s : sessions) {
            if (s.session_id != *file.header.session_id) {
                continue;
            }
            s.cohort = file.header.cohort.value_or(s.cohort);
            if (file.header.design) {
                s.design = parse_design(*file.header.design);
            }
            s.seed   = file.header.seed.value_or(0);
            s.policy = file.header.policy.value_or("");
        }
    }
    return sessions;
}

std::vector<SessionLog> load_session_dir(const std::filesystem::path& dir)
{
    if (!std::filesystem::is_directory(dir)) {
        throw DataError(fmt::format("{} is not a directory", dir.string()));
    }
    std::vector<std::filesystem::path> files;
    for (const auto& entry : std::filesystem::directory_iterator(dir)) {
        if (entry.is_regular_file() && entry.path().extension() == ".ndjson") {
            files.push_back(entry.path());
        }
    }
    std::sort(files.begin(), files.end());

    std::map<std::string, SessionLog> merged;
    for (const auto& f : files) {
        for (auto& s : read_log_file(f)) {
            auto [it, inserted] = merged.try_emplace(s.session_id, s);
            if (!inserted) {
                auto& target = it->second;
                target.records.insert(target.records.end(), s.records.begin(), s.records.end());
                if (target.policy.empty()) {
                    target.policy = s.policy;
                }
            }
        }
    }
    std::vector<SessionLog> sessions;
    for (auto& [id, s] : merged) {
        std::stable_sort(s.records.begin(), s.records.end(), [](const DecisionRecord& a, const DecisionRecord& b) {
            return std::pair(a.round, a.month) < std::pair(b.round, b.month);
        });
        sessions.push_back(std::move(s));
    }
    return sessions;
}

} // namespace fieldlab
