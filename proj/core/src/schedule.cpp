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
#include "fieldlab/schedule.h"

#include <fmt/format.h>

#include <utility>

namespace fieldlab
{

std::string_view to_string(ScheduleDesign d)
{
    return d == ScheduleDesign::FullFactorial ? "full-factorial" : "constant-rate";
}

ScheduleDesign parse_design(std::string_view s)
{
    if (s == "full-factorial") {
        return ScheduleDesign::FullFactorial;
    }
    if (s == "constant-rate") {
        return ScheduleDesign::ConstantRate;
    }
    throw ParseError(fmt::format("unknown schedule design '{}'", s));
}

TreatmentSchedule make_schedule(ScheduleDesign design, std::uint64_t session_seed, const ScheduleOptions& options)
{
    static constexpr std::array visibilities = {Visibility::Full, Visibility::InfectionHidden,
                                                Visibility::BiosecurityHidden, Visibility::BothHidden};
    static constexpr std::array distributions = {BiosecurityDistribution::Low, BiosecurityDistribution::High};

    TreatmentSchedule schedule;
    schedule.design = design;
    schedule.rounds.reserve(rounds_per_session);

    auto make_round = [&](double rate, BiosecurityDistribution dist, Visibility vis) {
        RoundConfig round;
        round.infection_rate = options.rate_override.value_or(rate);
        round.distribution   = dist;
        round.visibility     = vis;
        round.kernel         = options.kernel;
        return round;
    };

    if (design == ScheduleDesign::FullFactorial) {
        for (int copy = 0; copy < 2; ++copy) {
            for (double rate : {low_infection_rate, high_infection_rate}) {
                for (auto dist : distributions) {
                    for (auto vis : visibilities) {
                        schedule.rounds.push_back(make_round(rate, dist, vis));
                    }
                }
            }
        }
        // Fisher-Yates on a dedicated substream of the session seed.
        CounterRng shuffle_rng = CounterRng(session_seed).split(0x5C4EDULL);
        for (std::size_t i = schedule.rounds.size() - 1; i > 0; --i) {
            const auto j = static_cast<std::size_t>(shuffle_rng.below(i + 1));
            std::swap(schedule.rounds[i], schedule.rounds[j]);
        }
    }
    else {
        for (int r = 0; r < rounds_per_session; ++r) {
            schedule.rounds.push_back(make_round(constant_infection_rate, distributions[static_cast<std::size_t>(r % 2)],
                                                 visibilities[static_cast<std::size_t>((r / 2) % 4)]));
        }
    }

    for (std::size_t r = 0; r < schedule.rounds.size(); ++r) {
        schedule.rounds[r].seed = substream_key(session_seed, r);
        schedule.rounds[r].validate();
    }
    return schedule;
}

Treatment treatment_of(const RoundConfig& round)
{
    return {round.infection_rate, round.distribution, round.visibility};
}

} // namespace fieldlab
