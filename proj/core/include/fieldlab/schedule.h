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
#ifndef FIELDLAB_SCHEDULE_H
#define FIELDLAB_SCHEDULE_H

#include "fieldlab/simulation.h"

#include <cstdint>
#include <optional>
#include <string_view>
#include <vector>

namespace fieldlab
{

enum class ScheduleDesign
{
    FullFactorial, ///< 2 rates x 2 distributions x 4 visibility states, each twice
    ConstantRate,  ///< 32 rounds at the intermediate rate
};

std::string_view to_string(ScheduleDesign d);
ScheduleDesign parse_design(std::string_view s);

inline constexpr int rounds_per_session = 32;
inline constexpr double low_infection_rate  = 0.08;
inline constexpr double high_infection_rate = 0.3;
inline constexpr double constant_infection_rate = 0.15;

struct TreatmentSchedule {
    ScheduleDesign design = ScheduleDesign::FullFactorial;
    std::vector<RoundConfig> rounds;
};

struct ScheduleOptions {
    /// Replaces every round's infection rate (0 gives a no-risk smoke schedule).
    std::optional<double> rate_override;
    TransmissionKernel kernel = default_kernel();
};

/**
 * Builds the frozen 32-round plan of a session.
 *
 * FullFactorial lists the 16 (rate, distribution, visibility) combinations
 * twice and shuffles the order with the session seed. The rounds of a
 * ConstantRate schedule alternate the Low and High biosecurity distributions
 * and cycle through the visibility states. Round r gets the seed
 * substream_key(session_seed, r).
 */
TreatmentSchedule make_schedule(ScheduleDesign design, std::uint64_t session_seed, const ScheduleOptions& options = {});

/// Treatment combination of a round, for multiset checks.
struct Treatment {
    double infection_rate;
    BiosecurityDistribution distribution;
    Visibility visibility;

    friend auto operator<=>(const Treatment&, const Treatment&) = default;
};

Treatment treatment_of(const RoundConfig& round);

} // namespace fieldlab

#endif // FIELDLAB_SCHEDULE_H
