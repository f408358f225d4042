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
#ifndef FIELDLAB_SIMULATION_H
#define FIELDLAB_SIMULATION_H

#include "fieldlab/errors.h"
#include "fieldlab/random.h"

#include <array>
#include <compare>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace fieldlab
{

/// Ordinal biosecurity level, None(0) .. High(3).
class BiosecurityLevel
{
public:
    static constexpr int max_value = 3;

    constexpr BiosecurityLevel() = default;
    constexpr explicit BiosecurityLevel(int value)
        : m_value(value)
    {
        if (value < 0 || value > max_value) {
            throw InvalidConfig("biosecurity level out of range: " + std::to_string(value));
        }
    }

    constexpr int value() const
    {
        return m_value;
    }
    constexpr bool is_max() const
    {
        return m_value == max_value;
    }
    /// Next level; ContractViolation at High.
    BiosecurityLevel upgraded() const;

    friend constexpr auto operator<=>(BiosecurityLevel, BiosecurityLevel) = default;

private:
    int m_value = 0;
};

std::string_view level_name(BiosecurityLevel level);

struct Position {
    double x = 0.0;
    double y = 0.0;
};

double distance(Position a, Position b);

struct FacilityState {
    int id = 0;
    Position position;
    BiosecurityLevel biosecurity;
    bool infected  = false;
    bool is_player = false;
};

/**
 * Distance-decay transmission kernel.
 *
 * The per-contact probability that an infected source infects a target at
 * distance d is rate * exp(-d / distance_scale) * damping[target level].
 * damping[0] is 1 and the table is strictly decreasing, so the probability is
 * in [0, rate] and strictly decreasing in both distance and target level.
 */
class TransmissionKernel
{
public:
    using DampingTable = std::array<double, BiosecurityLevel::max_value + 1>;

    TransmissionKernel(double distance_scale, DampingTable damping);

    /// damping[level] = beta^level.
    static TransmissionKernel geometric(double distance_scale, double beta);

    double distance_scale() const
    {
        return m_distance_scale;
    }
    const DampingTable& damping() const
    {
        return m_damping;
    }
    double damping(BiosecurityLevel level) const
    {
        return m_damping[static_cast<std::size_t>(level.value())];
    }

    double contact_probability(double rate, double dist, BiosecurityLevel target) const;

    friend bool operator==(const TransmissionKernel&, const TransmissionKernel&) = default;

private:
    double m_distance_scale;
    DampingTable m_damping;
};

/// Kernel calibrated against the published expected-returns table
/// (see `fieldlab calibrate` and data/kernel.json).
TransmissionKernel default_kernel();

enum class BiosecurityDistribution
{
    Low,
    High,
};

enum class Visibility
{
    Full,
    InfectionHidden,
    BiosecurityHidden,
    BothHidden,
};

constexpr bool shows_infection(Visibility v)
{
    return v == Visibility::Full || v == Visibility::BiosecurityHidden;
}

constexpr bool shows_biosecurity(Visibility v)
{
    return v == Visibility::Full || v == Visibility::InfectionHidden;
}

std::string_view to_string(BiosecurityDistribution d);
std::string_view to_string(Visibility v);
BiosecurityDistribution parse_distribution(std::string_view s);
Visibility parse_visibility(std::string_view s);

struct RoundConfig {
    double infection_rate                = 0.08;
    BiosecurityDistribution distribution = BiosecurityDistribution::Low;
    Visibility visibility                = Visibility::Full;
    int months                           = 6;
    int facilities                       = 50;
    std::uint64_t seed                   = 0;
    TransmissionKernel kernel            = default_kernel();

    /// Throws InvalidConfig. The rate may be 0 (no-risk smoke schedules).
    void validate() const;
};

struct EconomicsConstants {
    double end_round_earnings = 15000.0;
    double upgrade_cost       = 1000.0;
    double infection_penalty  = 25000.0;

    double biosecurity_cost(BiosecurityLevel level) const
    {
        return upgrade_cost * level.value();
    }
    double survival_payout(BiosecurityLevel level) const
    {
        return end_round_earnings - biosecurity_cost(level);
    }
};

enum class Action
{
    Hold,
    Upgrade,
};

std::string_view to_string(Action a);
Action parse_action(std::string_view s);

struct WorldState {
    int month  = 0;
    int months = 6;
    std::vector<FacilityState> facilities;
    int player_id        = 0;
    bool round_over      = false;
    bool player_infected = false;

    /// Derived cache used by step_month: for every facility, the product of
    /// (1 - p) over the infected sources already folded in. Rebuilt lazily;
    /// callers never need to touch it.
    struct Cache {
        std::vector<double> escape;
        std::vector<char> folded;
    } cache;

    const FacilityState& player() const
    {
        return facilities[static_cast<std::size_t>(player_id)];
    }
    int infected_count() const;
};

/// n facilities, i.i.d. uniform positions in the unit square; facility 0 is
/// the player. Throws InvalidConfig when n < 2.
std::vector<FacilityState> generate_layout(std::uint64_t seed, int n = 50);
std::vector<FacilityState> generate_layout(CounterRng& rng, int n = 50);

/// One level drawn from the distribution.
BiosecurityLevel draw_biosecurity(BiosecurityDistribution dist, CounterRng& rng);

/// Draws a level for every non-player facility, in id order.
void assign_biosecurity(std::span<FacilityState> facilities, BiosecurityDistribution dist, CounterRng& rng);

/// Infects one non-player facility chosen uniformly. ContractViolation if any
/// facility is already infected.
void seed_initial_infection(WorldState& state, CounterRng& rng);

double transmission_probability(const FacilityState& source, const FacilityState& target, double rate,
                                const TransmissionKernel& kernel);

/// 1 - prod over infected sources of (1 - p), computed directly from the
/// current state and the target's current level.
double infection_probability(const WorldState& state, int target_id, double rate, const TransmissionKernel& kernel);

struct MonthEvent {
    enum class Kind
    {
        Infection,
        UpgradeIgnored,
    };
    Kind kind;
    int facility;
    int month;
};

struct MonthOutcome {
    std::vector<MonthEvent> events;
    double player_probability = 0.0;
    bool upgrade_ignored      = false;
};

/**
 * Advances one decision month: applies the player's action, then resolves
 * transmission in facility-id order. Every facility consumes one uniform
 * draw per month, used only if it is still uninfected. Upgrade at High is treated as Hold and reported as an
 * UpgradeIgnored event. ContractViolation if the round is already over.
 */
MonthOutcome step_month(WorldState& state, Action action, const RoundConfig& config, CounterRng& rng);

struct FacilityView {
    int id;
    Position position;
    bool is_player;
    std::optional<bool> infected;
    std::optional<int> biosecurity;
};

/// What the player may see before a decision. Fields hidden by the
/// visibility treatment are empty.
struct Observation {
    int month;
    int months;
    double infection_rate;
    Visibility visibility;
    int player_id;
    BiosecurityLevel player_level;
    std::optional<int> infected_count;
    std::vector<FacilityView> facilities;
};

Observation observe(const WorldState& state, const RoundConfig& config);

using DecisionPolicy = std::function<Action(const Observation&, CounterRng&)>;

struct MonthRecord {
    int month;
    Action action;
    BiosecurityLevel level_after;
    bool infected_this_month;
    bool upgrade_ignored;
    std::optional<int> visible_infected;

    friend bool operator==(const MonthRecord&, const MonthRecord&) = default;
};

struct RoundResult {
    std::vector<MonthRecord> records;
    double payout = 0.0;
    int months_played = 0;
    bool player_infected = false;
    BiosecurityLevel final_level;

    friend bool operator==(const RoundResult&, const RoundResult&) = default;
};

/// Text form of a round result, used for bit-exact replay comparisons.
std::string serialize(const RoundResult& result);

/**
 * Step-wise driver for a single round.
 *
 * The world substream builds the layout, neighbour biosecurity and the
 * initial infection, then feeds every month's transmission draws.
 */
class RoundEngine
{
public:
    RoundEngine(RoundConfig config, CounterRng world_rng, EconomicsConstants economics = {});

    Observation observe() const;

    struct Step {
        MonthRecord record;
        MonthOutcome outcome;
    };
    /// ContractViolation if the round is over.
    Step step(Action action);

    bool over() const
    {
        return m_world.round_over;
    }
    const WorldState& world() const
    {
        return m_world;
    }
    const RoundConfig& config() const
    {
        return m_config;
    }
    const std::vector<MonthRecord>& records() const
    {
        return m_records;
    }
    /// Payout of a finished round; ContractViolation while the round runs.
    double payout() const;
    RoundResult result() const;

private:
    RoundConfig m_config;
    EconomicsConstants m_economics;
    CounterRng m_rng;
    WorldState m_world;
    std::vector<MonthRecord> m_records;
};

/// Plays a round to completion. The world uses rng.split(0) and the policy
/// rng.split(1), so policy noise never shifts the epidemic draws.
RoundResult play_round(const RoundConfig& config, const DecisionPolicy& policy, const CounterRng& rng,
                       const EconomicsConstants& economics = {});

} // namespace fieldlab

#endif // FIELDLAB_SIMULATION_H
