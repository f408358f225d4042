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
#include "fieldlab/policy.h"

#include "fieldlab/text_config.h"

#include <fmt/format.h>

#include <fstream>

namespace fieldlab
{

std::string_view to_string(PolicyKind kind)
{
    switch (kind) {
    case PolicyKind::RiskAverse:
        return "risk-averse";
    case PolicyKind::RiskTolerant:
        return "risk-tolerant";
    case PolicyKind::Opportunistic:
        return "opportunistic";
    case PolicyKind::RiskNeutral:
        return "risk-neutral";
    }
    return "risk-tolerant";
}

PolicyKind parse_policy_kind(std::string_view s)
{
    for (auto k : {PolicyKind::RiskAverse, PolicyKind::RiskTolerant, PolicyKind::Opportunistic,
                   PolicyKind::RiskNeutral}) {
        if (s == to_string(k)) {
            return k;
        }
    }
    throw ParseError(fmt::format("unknown policy kind '{}'", s));
}

void PolicySpec::validate() const
{
    if (!(flip_probability >= 0.0 && flip_probability < 0.5)) {
        throw_invalid_config("flip probability must lie in [0, 0.5)");
    }
    if (!(opportunist_threshold > 0.0 && opportunist_threshold < 1.0)) {
        throw_invalid_config("opportunist threshold must lie in (0, 1)");
    }
    for (double p : {visibility.skip_when_infection_hidden, visibility.skip_when_biosecurity_visible}) {
        if (!(p >= 0.0 && p <= 1.0)) {
            throw_invalid_config("visibility skip probabilities must lie in [0, 1]");
        }
    }
}

std::string PolicySpec::label() const
{
    if (flip_probability > 0.0) {
        return fmt::format("noisy({},{})", to_string(kind), flip_probability);
    }
    return std::string(to_string(kind));
}

namespace
{

int target_level(const PolicySpec& policy, double rate)
{
    const bool high_risk = rate > policy.opportunist_threshold;
    switch (policy.kind) {
    case PolicyKind::RiskAverse:
        return BiosecurityLevel::max_value;
    case PolicyKind::RiskTolerant:
        return 0;
    case PolicyKind::Opportunistic:
        return high_risk ? BiosecurityLevel::max_value : 0;
    case PolicyKind::RiskNeutral:
        return high_risk ? BiosecurityLevel::max_value : 1;
    }
    return 0;
}

bool neighbour_biosecurity_visible(const Observation& obs)
{
    for (const auto& f : obs.facilities) {
        if (!f.is_player) {
            return f.biosecurity.has_value();
        }
    }
    return false;
}

bool draw(CounterRng& rng, double p)
{
    return p > 0.0 && rng.uniform() < p;
}

} // namespace

Action decide(const PolicySpec& policy, const Observation& obs, CounterRng& rng)
{
    auto action = obs.player_level.value() < target_level(policy, obs.infection_rate) ? Action::Upgrade : Action::Hold;

    if (action == Action::Upgrade) {
        if (!obs.infected_count.has_value() && draw(rng, policy.visibility.skip_when_infection_hidden)) {
            action = Action::Hold;
        }
        else if (neighbour_biosecurity_visible(obs) && draw(rng, policy.visibility.skip_when_biosecurity_visible)) {
            action = Action::Hold;
        }
    }
    if (draw(rng, policy.flip_probability)) {
        action = action == Action::Hold ? Action::Upgrade : Action::Hold;
    }
    return action;
}

DecisionPolicy make_policy(const PolicySpec& policy)
{
    policy.validate();
    return [policy](const Observation& obs, CounterRng& rng) {
        return decide(policy, obs, rng);
    };
}

int CohortSpec::total() const
{
    int n = 0;
    for (const auto& g : groups) {
        n += g.count;
    }
    return n;
}

CohortSpec parse_cohort_spec(std::istream& in)
{
    const auto config = TextConfig::parse(in);
    CohortSpec spec;
    for (const auto& [key, value] : config.entries()) {
        if (key == "seed") {
            spec.seed = parse_unsigned(value, "seed");
        }
        else if (key == "design") {
            spec.design = parse_design(value);
        }
        else if (key == "cohort") {
            if (value.empty()) {
                throw ParseError("cohort tag must not be empty");
            }
            spec.cohort = value;
        }
        else if (key == "rate_override") {
            spec.rate_override = parse_double(value, "rate_override");
        }
        else if (key == "group") {
            const auto words = split_words(value);
            if (words.size() < 2) {
                throw ParseError(fmt::format("group '{}': expected '<kind> <count> [option=value...]'", value));
            }
            CohortGroup group;
            group.policy.kind = parse_policy_kind(words[0]);
            const auto count  = parse_integer(words[1], "group count");
            if (count < 0) {
                throw ParseError("group count must be non-negative");
            }
            group.count = static_cast<int>(count);
            for (std::size_t i = 2; i < words.size(); ++i) {
                const auto eq = words[i].find('=');
                if (eq == std::string::npos) {
                    throw ParseError(fmt::format("group option '{}' is not option=value", words[i]));
                }
                const auto name = words[i].substr(0, eq);
                const auto v    = parse_double(words[i].substr(eq + 1), name);
                if (name == "epsilon") {
                    group.policy.flip_probability = v;
                }
                else if (name == "threshold") {
                    group.policy.opportunist_threshold = v;
                }
                else if (name == "skip_infection_hidden") {
                    group.policy.visibility.skip_when_infection_hidden = v;
                }
                else if (name == "skip_biosecurity_visible") {
                    group.policy.visibility.skip_when_biosecurity_visible = v;
                }
                else {
                    throw ParseError(fmt::format("unknown group option '{}'", name));
                }
            }
            try {
                group.policy.validate();
            }
            catch (const InvalidConfig& e) {
                throw ParseError(e.what());
            }
            spec.groups.push_back(group);
        }
        else {
            throw ParseError(fmt::format("unknown cohort spec key '{}'", key));
        }
    }
    return spec;
}

CohortSpec load_cohort_spec(const std::filesystem::path& path)
{
    std::ifstream in(path);
    if (!in) {
        throw DataError(fmt::format("cannot read {}", path.string()));
    }
    return parse_cohort_spec(in);
}

SessionLog play_session(const TreatmentSchedule& schedule, const PolicySpec& policy, std::string session_id,
                        std::string cohort, std::uint64_t seed)
{
    SessionLog session;
    session.session_id = std::move(session_id);
    session.cohort     = std::move(cohort);
    session.design     = schedule.design;
    session.seed       = seed;
    session.policy     = std::string(to_string(policy.kind));

    const auto decide_fn = make_policy(policy);
    for (std::size_t r = 0; r < schedule.rounds.size(); ++r) {
        const auto& round = schedule.rounds[r];
        const auto result = play_round(round, decide_fn, CounterRng(round.seed));
        for (const auto& month : result.records) {
            session.records.push_back(make_decision_record(session, static_cast<int>(r) + 1, round, month));
        }
    }
    return session;
}

std::vector<SessionLog> synth_cohort(const CohortSpec& spec)
{
    ScheduleOptions options;
    options.rate_override = spec.rate_override;
    options.kernel        = spec.kernel;

    std::vector<SessionLog> sessions;
    sessions.reserve(static_cast<std::size_t>(spec.total()));
    std::uint64_t index = 0;
    for (const auto& group : spec.groups) {
        for (int i = 0; i < group.count; ++i, ++index) {
            const auto seed     = substream_key(spec.seed, index);
            const auto schedule = make_schedule(spec.design, seed, options);
            sessions.push_back(
                play_session(schedule, group.policy, fmt::format("{}-{:05d}", spec.cohort, index + 1), spec.cohort, seed));
        }
    }
    return sessions;
}

} // namespace fieldlab
