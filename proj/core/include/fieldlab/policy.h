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
#ifndef FIELDLAB_POLICY_H
#define FIELDLAB_POLICY_H

#include "fieldlab/schedule.h"
#include "fieldlab/session_log.h"
#include "fieldlab/simulation.h"

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace fieldlab
{

enum class PolicyKind
{
    RiskAverse,    ///< upgrade every month until High
    RiskTolerant,  ///< never upgrade
    Opportunistic, ///< risk averse above the rate threshold, otherwise hold
    RiskNeutral,   ///< reach the expected-return optimum: Low at low rates, High at high rates
};

std::string_view to_string(PolicyKind kind);
PolicyKind parse_policy_kind(std::string_view s);

/// Probabilities of dropping an intended upgrade, keyed on what the
/// observation reveals. Zero for both gives a visibility-blind policy.
struct VisibilityResponse {
    double skip_when_infection_hidden   = 0.0;
    double skip_when_biosecurity_visible = 0.0;
};

struct PolicySpec {
    PolicyKind kind = PolicyKind::RiskTolerant;
    /// Per-month probability of flipping the action; > 0 makes the policy Noisy(kind, epsilon).
    double flip_probability     = 0.0;
    double opportunist_threshold = 0.15;
    VisibilityResponse visibility;

    /// Throws InvalidConfig: epsilon in [0, 0.5), threshold in (0, 1), skips in [0, 1].
    void validate() const;
    /// e.g. "risk-averse" or "noisy(opportunistic,0.05)".
    std::string label() const;
};

/// One monthly choice. Draws from rng only when the policy has a random component.
Action decide(const PolicySpec& policy, const Observation& observation, CounterRng& rng);

DecisionPolicy make_policy(const PolicySpec& policy);

struct CohortGroup {
    PolicySpec policy;
    int count = 0;
};

struct CohortSpec {
    std::vector<CohortGroup> groups;
    std::uint64_t seed    = 1;
    ScheduleDesign design = ScheduleDesign::FullFactorial;
    std::string cohort    = "bot";
    std::optional<double> rate_override;
    TransmissionKernel kernel = default_kernel();

    int total() const;
};

/**
 * Reads a cohort spec:
 *
 *     seed = 2024
 *     design = full-factorial        # or constant-rate
 *     cohort = bot
 *     rate_override = 0              # optional
 *     group = risk-averse 300 epsilon=0.05
 *     group = opportunistic 400 threshold=0.15 skip_infection_hidden=0.2
 *
 * Group options: epsilon, threshold, skip_infection_hidden,
 * skip_biosecurity_visible. ParseError on malformed input.
 */
CohortSpec parse_cohort_spec(std::istream& in);
CohortSpec load_cohort_spec(const std::filesystem::path& path);

/// Plays one full session of the schedule with the given policy.
SessionLog play_session(const TreatmentSchedule& schedule, const PolicySpec& policy, std::string session_id,
                        std::string cohort, std::uint64_t seed);

/**
 * One session per synthetic participant, groups in order. Participant i (0-based
 * across groups) is "<cohort>-<i+1, 5 digits>" with session seed
 * substream_key(spec.seed, i).
 */
std::vector<SessionLog> synth_cohort(const CohortSpec& spec);

} // namespace fieldlab

#endif // FIELDLAB_POLICY_H
