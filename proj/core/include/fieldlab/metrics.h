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
#ifndef FIELDLAB_METRICS_H
#define FIELDLAB_METRICS_H

#include "fieldlab/session_log.h"
#include "fieldlab/simulation.h"

#include <array>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>

namespace fieldlab
{

/// Mean post-decision biosecurity level over a set of decisions.
struct AdoptionRating {
    long level_sum = 0;
    int decisions  = 0;

    double value() const
    {
        return static_cast<double>(level_sum) / decisions;
    }
};

/**
 * Rating of one round's decisions, given as post-decision levels in month
 * order. The list must be non-empty (UndefinedRating), each level in 0..3
 * and nondecreasing by steps of at most one, starting at 0 or 1
 * (ContractViolation otherwise).
 */
AdoptionRating adoption_rating(std::span<const int> levels_after);

/// Pools ratings by total decision count (not by averaging ratings).
AdoptionRating pool(std::span<const AdoptionRating> ratings);

enum class RateBand
{
    Low,
    High,
    Intermediate,
};
/// Rates below the intermediate rate 0.15 are Low, above are High.
RateBand rate_band(double infection_rate);

using RecordFilter = std::function<bool(const DecisionRecord&)>;

/// Pooled rating of the session's records accepted by the filter; nullopt if none is.
std::optional<AdoptionRating> session_rating(const SessionLog& session, const RecordFilter& filter = {});

struct RatingVector {
    std::optional<AdoptionRating> low;
    std::optional<AdoptionRating> high;

    bool complete() const
    {
        return low.has_value() && high.has_value();
    }
    std::array<double, 2> point() const
    {
        return {low->value(), high->value()};
    }
};

/// Low- and high-rate components, each pooled over all that rate's rounds.
RatingVector rating_vector(const SessionLog& session, const RecordFilter& filter = {});

/// (E - b_c) * (1 - p) - p * C for the cumulative cost b_c of the level.
double expected_return(BiosecurityLevel level, double infection_probability, const EconomicsConstants& economics = {});

struct InfectionEstimate {
    double probability = 0.0;
    double half_width  = 0.0; ///< 1.96 * sqrt(p (1 - p) / trials)
    long trials        = 0;
    long infections    = 0;
};

InfectionEstimate make_estimate(long infections, long trials);

/// Probe policy: upgrade every month until `level` is reached, then hold.
DecisionPolicy probe_policy(BiosecurityLevel level);

/**
 * Fraction of rounds in which the player is infected when following the
 * probe policy for `level`. Trial t plays config with seed
 * substream_key(config.seed, t).
 */
InfectionEstimate estimate_infection_prob(const RoundConfig& config, BiosecurityLevel level, long trials);

/**
 * Infection estimates of all four probe levels from one set of trials.
 *
 * The draws of a round do not depend on the player's level until the player
 * is infected, so one epidemic per trial serves every level. Results equal
 * four estimate_infection_prob calls with the same config and trials. When
 * `mixed_distributions` is set, even trials use the Low and odd trials the
 * High biosecurity distribution.
 */
std::array<InfectionEstimate, 4> estimate_probe_levels(const RoundConfig& config, long trials,
                                                       bool mixed_distributions = false);

} // namespace fieldlab

#endif // FIELDLAB_METRICS_H
