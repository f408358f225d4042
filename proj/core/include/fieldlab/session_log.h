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
#ifndef FIELDLAB_SESSION_LOG_H
#define FIELDLAB_SESSION_LOG_H

#include "fieldlab/schedule.h"
#include "fieldlab/simulation.h"

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace fieldlab
{

inline constexpr std::string_view decision_log_schema = "fieldlab.decision-log";
inline constexpr int decision_log_version             = 1;

/**
 * One monthly choice with its observed context.
 *
 * Serialized as one JSON object per line, fields in declaration order.
 * visible_infected is null exactly when the round's visibility treatment
 * hides infection status; token is null when the client sent none.
 */
struct DecisionRecord {
    std::string session_id;
    std::string cohort;
    ScheduleDesign design = ScheduleDesign::FullFactorial;
    int round             = 1; ///< 1-based
    int month             = 1; ///< 1-based
    double infection_rate = 0.0;
    BiosecurityDistribution distribution = BiosecurityDistribution::Low;
    Visibility visibility                = Visibility::Full;
    std::optional<int> visible_infected;
    Action action            = Action::Hold;
    int level_after          = 0;
    bool infected_this_month = false;
    bool upgrade_ignored     = false;
    std::optional<std::string> token;
    std::int64_t timestamp_ms = 0;

    friend bool operator==(const DecisionRecord&, const DecisionRecord&) = default;
};

/// A participant's history, plus the metadata of synthetic sessions.
struct SessionLog {
    std::string session_id;
    std::string cohort;
    ScheduleDesign design = ScheduleDesign::FullFactorial;
    std::uint64_t seed    = 0;
    std::string policy; ///< generating policy of a synthetic session, else empty
    std::vector<DecisionRecord> records;

    /// Payouts of the completed rounds, in round order, derived from records alone.
    std::vector<double> round_payouts(int months = 6, const EconomicsConstants& economics = {}) const;
    double balance(int months = 6, const EconomicsConstants& economics = {}) const;
    /// Number of distinct rounds present in the records.
    int rounds_played() const;
};

/// Header line of a decision-log file. Session files carry the optional fields.
struct LogHeader {
    int version = decision_log_version;
    std::optional<std::string> session_id;
    std::optional<std::string> cohort;
    std::optional<std::string> design;
    std::optional<std::uint64_t> seed;
    std::optional<std::string> policy;
};

std::string encode_record(const DecisionRecord& record);
/// ParseError on malformed lines or unknown enum values.
DecisionRecord decode_record(std::string_view line);

std::string encode_header(const LogHeader& header);
LogHeader decode_header(std::string_view line);

void write_decision_log(std::ostream& out, std::span<const DecisionRecord> records, const LogHeader& header = {});

struct DecisionLogFile {
    LogHeader header;
    std::vector<DecisionRecord> records;
};
DecisionLogFile read_decision_log(std::istream& in);

/// CSV mirror of the record schema; header row then one row per record.
void write_decision_csv(std::ostream& out, std::span<const DecisionRecord> records);

/// Log record of one played month.
DecisionRecord make_decision_record(const SessionLog& session, int round, const RoundConfig& config,
                                    const MonthRecord& month);

/// Groups records by session id (sessions sorted by id, records by round and month).
std::vector<SessionLog> group_sessions(std::span<const DecisionRecord> records);

void write_session_file(const std::filesystem::path& path, const SessionLog& session);
std::vector<SessionLog> read_log_file(const std::filesystem::path& path);
/// Every *.ndjson file of the directory, merged by session id.
std::vector<SessionLog> load_session_dir(const std::filesystem::path& dir);

} // namespace fieldlab

#endif // FIELDLAB_SESSION_LOG_H
