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
#include "fieldlab/metrics.h"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>

namespace fieldlab
{

AdoptionRating adoption_rating(std::span<const int> levels_after)
{
    if (levels_after.empty()) {
        throw UndefinedRating("adoption rating of an empty decision list");
    }
    AdoptionRating rating;
    int previous = 0;
    for (int level : levels_after) {
        if (level < 0 || level > BiosecurityLevel::max_value) {
            throw_contract_violation(fmt::format("biosecurity level {} out of range", level));
        }
        if (level < previous || level > previous + 1) {
            throw_contract_violation("post-decision levels must rise by at most one per month and never fall");
        }
        previous = level;
        rating.level_sum += level;
        ++rating.decisions;
    }
    return rating;
}

AdoptionRating pool(std::span<const AdoptionRating> ratings)
{
    AdoptionRating pooled;
    for (const auto& r : ratings) {
        pooled.level_sum += r.level_sum;
        pooled.decisions += r.decisions;
    }
    if (pooled.decisions == 0) {
        throw UndefinedRating("pooled adoption rating without decisions");
    }
    return pooled;
}

RateBand rate_band(double infection_rate)
{
    if (infection_rate < 0.15 - 1e-12) {
        return RateBand::Low;
    }
    if (infection_rate > 0.15 + 1e-12) {
        return RateBand::High;
    }
    return RateBand::Intermediate;
}

std::optional<AdoptionRating> session_rating(const SessionLog& session, const RecordFilter& filter)
{
    std::vector<AdoptionRating> rounds;
    std::vector<int> levels;
    int current_round = -1;
    auto flush        = [&] {
        if (!levels.empty()) {
            rounds.push_back(adoption_rating(levels));
            levels.clear();
        }
    };
    for (const auto& r : session.records) {
        if (filter && !filter(r)) {
            continue;
        }
        if (r.round != current_round) {
            flush();
            current_round = r.round;
        }
        levels.push_back(r.level_after);
    }
    flush();
    if (rounds.empty()) {
        return std::nullopt;
    }
    return pool(rounds);
}

RatingVector rating_vector(const SessionLog& session, const RecordFilter& filter)
{
    auto in_band = [&](RateBand band) {
        return [&filter, band](const DecisionRecord& r) {
            return rate_band(r.infection_rate) == band && (!filter || filter(r));
        };
    };
    return {session_rating(session, in_band(RateBand::Low)), session_rating(session, in_band(RateBand::High))};
}

double expected_return(BiosecurityLevel level, double p, const EconomicsConstants& economics)
{
    if (!(p >= 0.0 && p <= 1.0)) {
        throw_invalid_config("infection probability outside [0, 1]");
    }
    return economics.survival_payout(level) * (1.0 - p) - p * economics.infection_penalty;
}

InfectionEstimate make_estimate(long infections, long trials)
{
    InfectionEstimate e;
    e.trials      = trials;
    e.infections  = infections;
    e.probability = trials > 0 ? static_cast<double>(infections) / static_cast<double>(trials) : 0.0;
    e.half_width  = trials > 0 ? 1.96 * std::sqrt(e.probability * (1.0 - e.probability) / static_cast<double>(trials))
                               : 0.0;
    return e;
}

DecisionPolicy probe_policy(BiosecurityLevel level)
{
    return [level](const Observation& obs, CounterRng&) {
        return obs.player_level < level ? Action::Upgrade : Action::Hold;
    };
}

InfectionEstimate estimate_infection_prob(const RoundConfig& config, BiosecurityLevel level, long trials)
{
    if (trials < 1) {
        throw_invalid_config("at least one trial is required");
    }
    const auto policy = probe_policy(level);
    long infections   = 0;
    for (long t = 0; t < trials; ++t) {
        const auto result = play_round(config, policy, CounterRng(substream_key(config.seed, static_cast<std::uint64_t>(t))));
        infections += result.player_infected ? 1 : 0;
    }
    return make_estimate(infections, trials);
}

std::array<InfectionEstimate, 4> estimate_probe_levels(const RoundConfig& base, long trials, bool mixed_distributions)
{
    if (trials < 1) {
        throw_invalid_config("at least one trial is required");
    }
    base.validate();
    constexpr int levels = BiosecurityLevel::max_value + 1;
    std::array<long, levels> infections{};
    RoundConfig config = base;

    for (long t = 0; t < trials; ++t) {
        if (mixed_distributions) {
            config.distribution = t % 2 == 0 ? BiosecurityDistribution::Low : BiosecurityDistribution::High;
        }
        // Same construction as RoundEngine, on the world substream play_round uses.
        CounterRng rng = CounterRng(substream_key(config.seed, static_cast<std::uint64_t>(t))).split(0);
        WorldState world;
        world.months     = config.months;
        world.facilities = generate_layout(rng, config.facilities);
        assign_biosecurity(world.facilities, config.distribution, rng);
        seed_initial_infection(world, rng);

        std::array<bool, levels> alive;
        alive.fill(true);
        auto& player = world.facilities[0];
        for (int month = 1; month <= config.months; ++month) {
            if (std::none_of(alive.begin(), alive.end(), [](bool a) { return a; })) {
                break;
            }
            std::array<double, levels> p_player{};
            for (int k = 0; k < levels; ++k) {
                player.biosecurity = BiosecurityLevel(std::min(month, k));
                p_player[static_cast<std::size_t>(k)] =
                    infection_probability(world, 0, config.infection_rate, config.kernel);
            }
            // step_month's first draw of the month belongs to facility 0, the player.
            const double u_player = CounterRng(rng).uniform();
            for (std::size_t k = 0; k < levels; ++k) {
                if (alive[k] && u_player < p_player[k]) {
                    alive[k] = false;
                    ++infections[k];
                }
            }
            // Advance the neighbours; the player's outcome in the shared world is discarded.
            step_month(world, Action::Hold, config, rng);
            player.infected       = false;
            world.player_infected = false;
            world.round_over      = false;
        }
    }

    std::array<InfectionEstimate, levels> estimates;
    for (int k = 0; k < levels; ++k) {
        estimates[static_cast<std::size_t>(k)] = make_estimate(infections[static_cast<std::size_t>(k)], trials);
    }
    return estimates;
}

} // namespace fieldlab
