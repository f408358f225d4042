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
#include "fieldlab/service/session_manager.h"
#include "fieldlab/random.h"

#include <fmt/format.h>
#include <json.hpp>

#include <algorithm>
#include <chrono>
#include <optional>
#include <sstream>

namespace fieldlab::service
{

ServiceError::ServiceError(int status, std::string code, const std::string& message)
    : Error(message)
    , m_status(status)
    , m_code(std::move(code))
{
}

std::int64_t system_clock_ms()
{
    using namespace std::chrono;
    return duration_cast<milliseconds>(system_clock::now().time_since_epoch()).count();
}

using nlohmann::ordered_json;

struct LiveSession {
    std::mutex mutex;
    SessionMeta meta;
    TreatmentSchedule schedule;
    SessionStatus status = SessionStatus::Active;
    std::size_t round    = 0;
    std::optional<RoundEngine> engine;
    SessionLog log;
    std::int64_t last_activity_ms = 0;
    std::map<std::string, std::string> tokens;
};

namespace
{

ordered_json parse_body(const std::string& body)
{
    if (body.empty()) {
        return ordered_json::object();
    }
    try {
        auto j = ordered_json::parse(body);
        if (!j.is_object()) {
            throw ServiceError(400, "bad-request", "request body must be a JSON object");
        }
        return j;
    }
    catch (const nlohmann::json::exception& e) {
        throw ServiceError(400, "bad-request", fmt::format("malformed JSON: {}", e.what()));
    }
}

template <class T>
std::optional<T> optional_field(const ordered_json& j, const char* key)
{
    const auto it = j.find(key);
    if (it == j.end() || it->is_null()) {
        return std::nullopt;
    }
    try {
        return it->get<T>();
    }
    catch (const nlohmann::json::exception&) {
        throw ServiceError(400, "bad-request", fmt::format("field '{}' has the wrong type", key));
    }
}

void start_round(LiveSession& live);

ordered_json observation_json(const LiveSession& live)
{
    const auto obs    = live.engine->observe();
    const auto& round = live.schedule.rounds[live.round];
    ordered_json j;
    j["round"]          = live.round + 1;
    j["rounds"]         = live.schedule.rounds.size();
    j["month"]          = obs.month;
    j["months"]         = obs.months;
    j["infection_rate"] = obs.infection_rate;
    j["visibility"]     = to_string(obs.visibility);
    if (shows_biosecurity(obs.visibility)) {
        j["distribution"] = to_string(round.distribution);
    }
    j["player"] = {{"id", obs.player_id}, {"level", obs.player_level.value()}, {"level_name", level_name(obs.player_level)}};
    if (obs.infected_count) {
        j["infected_count"] = *obs.infected_count;
    }
    ordered_json facilities = ordered_json::array();
    for (const auto& f : obs.facilities) {
        ordered_json fj;
        fj["id"]     = f.id;
        fj["x"]      = f.position.x;
        fj["y"]      = f.position.y;
        fj["player"] = f.is_player;
        if (f.infected) {
            fj["infected"] = *f.infected;
        }
        if (f.biosecurity) {
            fj["level"] = *f.biosecurity;
        }
        facilities.push_back(std::move(fj));
    }
    j["facilities"] = std::move(facilities);
    return j;
}

ordered_json session_json(const LiveSession& live)
{
    ordered_json j;
    j["session_id"]       = live.meta.session_id;
    j["cohort"]           = live.meta.cohort;
    j["design"]           = to_string(live.meta.design);
    j["seed"]             = live.meta.seed;
    j["status"]           = to_string(live.status);
    j["rounds_completed"] = live.round;
    j["balance"]          = live.log.balance();
    if (live.status == SessionStatus::Active && live.engine) {
        j["observation"] = observation_json(live);
    }
    return j;
}

void start_round(LiveSession& live)
{
    if (live.round >= live.schedule.rounds.size()) {
        live.engine.reset();
        live.status = SessionStatus::Complete;
        return;
    }
    const auto& config = live.schedule.rounds[live.round];
    live.engine.emplace(config, CounterRng(config.seed).split(0));
}

/// Steps a copy of the round; the caller commits with commit_step once the
/// record is on disk.
struct PendingStep {
    RoundEngine engine;
    DecisionRecord record;
};

PendingStep prepare_step(const LiveSession& live, Action action)
{
    PendingStep p{*live.engine, {}};
    const auto step = p.engine.step(action);
    p.record = make_decision_record(live.log, static_cast<int>(live.round) + 1, live.schedule.rounds[live.round],
                                    step.record);
    return p;
}

std::string commit_step(LiveSession& live, PendingStep&& p)
{
    live.engine = std::move(p.engine);
    live.log.records.push_back(p.record);
    live.last_activity_ms = p.record.timestamp_ms;
    const auto& r         = p.record;

    ordered_json j;
    j["session_id"] = live.meta.session_id;
    j["accepted"]   = {{"round", r.round},
                       {"month", r.month},
                       {"action", to_string(r.action)},
                       {"level_after", r.level_after},
                       {"upgrade_ignored", r.upgrade_ignored}};
    const bool over = live.engine->over();
    j["round_over"] = over;
    if (over) {
        const auto payout = live.engine->payout();
        j["round_summary"] = {{"round", r.round},
                              {"months_played", live.engine->records().size()},
                              {"player_infected", live.engine->world().player_infected},
                              {"final_level", live.engine->world().player().biosecurity.value()},
                              {"payout", payout}};
        ++live.round;
        start_round(live);
    }
    j["status"]  = to_string(live.status);
    j["balance"] = live.log.balance();
    if (live.status == SessionStatus::Active) {
        j["observation"] = observation_json(live);
    }
    auto body = j.dump();
    if (r.token) {
        live.tokens.emplace(*r.token, body);
    }
    return body;
}

bool same_outcome(const DecisionRecord& a, const DecisionRecord& b)
{
    auto x         = a;
    x.token        = b.token;
    x.timestamp_ms = b.timestamp_ms;
    return x == b;
}

} // namespace

SessionManager::SessionManager(ServiceConfig config, Clock clock)
    : m_config(std::move(config))
    , m_clock(std::move(clock))
    , m_store(m_config.data_dir)
{
    for (auto& entry : m_store.load_index()) {
        auto live  = std::make_shared<LiveSession>();
        live->meta = entry.meta;
        ScheduleOptions options;
        options.kernel        = live->meta.kernel;
        options.rate_override = live->meta.rate_override;
        live->schedule        = make_schedule(live->meta.design, live->meta.seed, options);
        live->log.session_id  = live->meta.session_id;
        live->log.cohort      = live->meta.cohort;
        live->log.design      = live->meta.design;
        live->log.seed        = live->meta.seed;
        live->last_activity_ms = live->meta.created_ms;
        start_round(*live);
        for (const auto& rec : m_store.read_records(live->meta.session_id)) {
            if (live->status != SessionStatus::Active || rec.round != static_cast<int>(live->round) + 1 ||
                rec.month != live->engine->world().month + 1) {
                throw DataError(fmt::format("log of session {} is out of sequence at round {} month {}",
                                            live->meta.session_id, rec.round, rec.month));
            }
            auto pending = prepare_step(*live, rec.action);
            if (!same_outcome(pending.record, rec)) {
                throw DataError(fmt::format("log of session {} diverges from its replay at round {} month {}",
                                            live->meta.session_id, rec.round, rec.month));
            }
            pending.record = rec;
            commit_step(*live, std::move(pending));
        }
        if (entry.status == SessionStatus::Abandoned && live->status == SessionStatus::Active) {
            live->status = SessionStatus::Abandoned;
        }
        m_sessions.emplace(live->meta.session_id, std::move(live));
        ++m_created;
    }
}

SessionManager::~SessionManager() = default;

std::shared_ptr<LiveSession> SessionManager::find(const std::string& session_id)
{
    const auto it = m_sessions.find(session_id);
    if (it == m_sessions.end()) {
        throw ServiceError(404, "not-found", fmt::format("unknown session '{}'", session_id));
    }
    return it->second;
}

void SessionManager::refresh(LiveSession& live, std::int64_t now)
{
    if (live.status == SessionStatus::Active && now - live.last_activity_ms > m_config.abandon_timeout.count()) {
        live.status = SessionStatus::Abandoned;
        m_store.mark(live.meta.session_id, SessionStatus::Abandoned, now);
    }
}

std::string SessionManager::create_session(const std::string& body)
{
    const auto j      = parse_body(body);
    const auto cohort = optional_field<std::string>(j, "cohort");
    if (!cohort || std::find(m_config.cohorts.begin(), m_config.cohorts.end(), *cohort) == m_config.cohorts.end()) {
        throw ServiceError(400, "unknown-cohort", fmt::format("unknown cohort '{}'", cohort.value_or("")));
    }
    const auto design_name = optional_field<std::string>(j, "design");
    if (!design_name) {
        throw ServiceError(400, "unknown-design", "design is required");
    }
    ScheduleDesign design;
    try {
        design = parse_design(*design_name);
    }
    catch (const Error&) {
        throw ServiceError(400, "unknown-design", fmt::format("unknown design '{}'", *design_name));
    }

    std::unique_lock lock(m_sessions_mutex);
    auto live              = std::make_shared<LiveSession>();
    live->meta.session_id  = fmt::format("{}-{:06d}", *cohort, m_created + 1);
    live->meta.cohort      = *cohort;
    live->meta.design      = design;
    live->meta.seed        = optional_field<std::uint64_t>(j, "seed").value_or(substream_key(m_config.seed, m_created));
    live->meta.kernel      = m_config.kernel;
    live->meta.rate_override = m_config.rate_override;
    live->meta.created_ms  = m_clock();
    ScheduleOptions options;
    options.kernel         = live->meta.kernel;
    options.rate_override  = live->meta.rate_override;
    live->schedule         = make_schedule(design, live->meta.seed, options);
    live->log.session_id   = live->meta.session_id;
    live->log.cohort       = live->meta.cohort;
    live->log.design       = design;
    live->log.seed         = live->meta.seed;
    live->last_activity_ms = live->meta.created_ms;
    start_round(*live);
    m_store.create(live->meta);
    ++m_created;
    m_sessions.emplace(live->meta.session_id, live);
    return session_json(*live).dump();
}

std::string SessionManager::state(const std::string& session_id)
{
    std::shared_lock lock(m_sessions_mutex);
    auto live = find(session_id);
    std::lock_guard session_lock(live->mutex);
    refresh(*live, m_clock());
    return session_json(*live).dump();
}

std::string SessionManager::submit_decision(const std::string& session_id, const std::string& body)
{
    const auto j = parse_body(body);
    std::shared_lock lock(m_sessions_mutex);
    auto live = find(session_id);
    std::lock_guard session_lock(live->mutex);

    const auto token = optional_field<std::string>(j, "token");
    if (token) {
        const auto it = live->tokens.find(*token);
        if (it != live->tokens.end()) {
            return it->second;
        }
    }
    const auto now = m_clock();
    refresh(*live, now);
    if (live->status != SessionStatus::Active) {
        throw ServiceError(409, "session-inactive",
                           fmt::format("session {} is {}", session_id, to_string(live->status)));
    }
    const auto action_name = optional_field<std::string>(j, "action");
    if (!action_name) {
        throw ServiceError(400, "bad-request", "action is required");
    }
    Action action;
    try {
        action = parse_action(*action_name);
    }
    catch (const Error&) {
        throw ServiceError(400, "bad-request", fmt::format("unknown action '{}'", *action_name));
    }
    const int round = static_cast<int>(live->round) + 1;
    const int month = live->engine->world().month + 1;
    const auto claimed_round = optional_field<int>(j, "round");
    const auto claimed_month = optional_field<int>(j, "month");
    if ((claimed_round && *claimed_round != round) || (claimed_month && *claimed_month != month)) {
        throw ServiceError(409, "out-of-sequence",
                           fmt::format("session {} awaits round {} month {}", session_id, round, month));
    }

    auto pending               = prepare_step(*live, action);
    pending.record.token       = token;
    pending.record.timestamp_ms = now;
    m_store.append(session_id, pending.record);
    return commit_step(*live, std::move(pending));
}

std::string SessionManager::summary(const std::string& session_id)
{
    std::shared_lock lock(m_sessions_mutex);
    auto live = find(session_id);
    std::lock_guard session_lock(live->mutex);
    refresh(*live, m_clock());
    const auto policy  = payout_policy(live->meta.cohort, live->meta.design);
    const auto balance = live->log.balance();
    ordered_json j;
    j["session_id"]       = live->meta.session_id;
    j["cohort"]           = live->meta.cohort;
    j["design"]           = to_string(live->meta.design);
    j["status"]           = to_string(live->status);
    j["rounds_completed"] = live->round;
    j["balance"]          = balance;
    j["round_payouts"]    = live->log.round_payouts();
    j["payout"]           = {{"divisor", policy.divisor}, {"amount", policy.real_payout(balance)}};
    return j.dump();
}

int SessionManager::sweep_abandoned()
{
    std::shared_lock lock(m_sessions_mutex);
    const auto now = m_clock();
    int changed    = 0;
    for (auto& [id, live] : m_sessions) {
        std::lock_guard session_lock(live->mutex);
        const auto before = live->status;
        refresh(*live, now);
        changed += before != live->status;
    }
    return changed;
}

std::string SessionManager::export_logs(const ExportFilter& filter, ExportFormat format)
{
    sweep_abandoned();
    std::unique_lock lock(m_sessions_mutex);
    std::vector<DecisionRecord> records;
    for (const auto& [id, live] : m_sessions) {
        std::lock_guard session_lock(live->mutex);
        if ((filter.cohort && live->meta.cohort != *filter.cohort) ||
            (filter.design && live->meta.design != *filter.design) ||
            (live->status == SessionStatus::Abandoned && !filter.include_abandoned)) {
            continue;
        }
        for (const auto& r : live->log.records) {
            if ((filter.from_ms && r.timestamp_ms < *filter.from_ms) ||
                (filter.to_ms && r.timestamp_ms > *filter.to_ms)) {
                continue;
            }
            records.push_back(r);
        }
    }
    std::ostringstream out;
    if (format == ExportFormat::Csv) {
        write_decision_csv(out, records);
    }
    else {
        write_decision_log(out, records);
    }
    return out.str();
}

} // namespace fieldlab::service
