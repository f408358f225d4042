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
#include "fieldlab/simulation.h"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>

namespace fieldlab
{

BiosecurityLevel BiosecurityLevel::upgraded() const
{
    if (is_max()) {
        throw_contract_violation("cannot upgrade beyond High");
    }
    return BiosecurityLevel(m_value + 1);
}

std::string_view level_name(BiosecurityLevel level)
{
    static constexpr std::array<std::string_view, 4> names = {"None", "Low", "Medium", "High"};
    return names[static_cast<std::size_t>(level.value())];
}

double distance(Position a, Position b)
{
    return std::hypot(a.x - b.x, a.y - b.y);
}

TransmissionKernel::TransmissionKernel(double distance_scale, DampingTable damping)
    : m_distance_scale(distance_scale)
    , m_damping(damping)
{
    if (!(distance_scale > 0.0) || !std::isfinite(distance_scale)) {
        throw_invalid_config("kernel distance scale must be positive");
    }
    if (m_damping[0] != 1.0) {
        throw_invalid_config("kernel damping at level None must be 1");
    }
    for (std::size_t i = 1; i < m_damping.size(); ++i) {
        if (!(m_damping[i] > 0.0) || !(m_damping[i] < m_damping[i - 1])) {
            throw_invalid_config("kernel damping must be positive and strictly decreasing in level");
        }
    }
}

TransmissionKernel TransmissionKernel::geometric(double distance_scale, double beta)
{
    if (!(beta > 0.0 && beta < 1.0)) {
        throw_invalid_config("geometric damping must lie in (0, 1)");
    }
    return TransmissionKernel(distance_scale, {1.0, beta, beta * beta, beta * beta * beta});
}

double TransmissionKernel::contact_probability(double rate, double dist, BiosecurityLevel target) const
{
    return rate * std::exp(-dist / m_distance_scale) * damping(target);
}

TransmissionKernel default_kernel()
{
    // Output of `fieldlab calibrate data/infection_targets.csv`; see data/kernel.json.
    return TransmissionKernel(0.1363036997427219, {1.0, 0.9434607203155547, 0.6838567409865388, 0.2602349345218655});
}

std::string_view to_string(BiosecurityDistribution d)
{
    return d == BiosecurityDistribution::Low ? "low" : "high";
}

std::string_view to_string(Visibility v)
{
    switch (v) {
    case Visibility::Full:
        return "full";
    case Visibility::InfectionHidden:
        return "infection-hidden";
    case Visibility::BiosecurityHidden:
        return "biosecurity-hidden";
    case Visibility::BothHidden:
        return "both-hidden";
    }
    return "full";
}

BiosecurityDistribution parse_distribution(std::string_view s)
{
    if (s == "low") {
        return BiosecurityDistribution::Low;
    }
    if (s == "high") {
        return BiosecurityDistribution::High;
    }
    throw ParseError(fmt::format("unknown biosecurity distribution '{}'", s));
}

Visibility parse_visibility(std::string_view s)
{
    for (auto v : {Visibility::Full, Visibility::InfectionHidden, Visibility::BiosecurityHidden,
                   Visibility::BothHidden}) {
        if (s == to_string(v)) {
            return v;
        }
    }
    throw ParseError(fmt::format("unknown visibility treatment '{}'", s));
}

std::string_view to_string(Action a)
{
    return a == Action::Hold ? "hold" : "upgrade";
}

Action parse_action(std::string_view s)
{
    if (s == "hold") {
        return Action::Hold;
    }
    if (s == "upgrade") {
        return Action::Upgrade;
    }
    throw ParseError(fmt::format("unknown action '{}'", s));
}

void RoundConfig::validate() const
{
    if (!(infection_rate >= 0.0 && infection_rate < 1.0)) {
        throw_invalid_config(fmt::format("infection rate {} outside [0, 1)", infection_rate));
    }
    if (months < 1) {
        throw_invalid_config("a round needs at least one month");
    }
    if (facilities < 2) {
        throw_invalid_config("a round needs at least two facilities");
    }
}

int WorldState::infected_count() const
{
    return static_cast<int>(std::count_if(facilities.begin(), facilities.end(), [](const FacilityState& f) {
        return f.infected;
    }));
}

std::vector<FacilityState> generate_layout(CounterRng& rng, int n)
{
    if (n < 2) {
        throw_invalid_config(fmt::format("layout needs at least 2 facilities, got {}", n));
    }
    std::vector<FacilityState> facilities(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
        auto& f      = facilities[static_cast<std::size_t>(i)];
        f.id         = i;
        f.position.x = rng.uniform();
        f.position.y = rng.uniform();
    }
    facilities[0].is_player = true;
    return facilities;
}

std::vector<FacilityState> generate_layout(std::uint64_t seed, int n)
{
    CounterRng rng(seed);
    return generate_layout(rng, n);
}

BiosecurityLevel draw_biosecurity(BiosecurityDistribution dist, CounterRng& rng)
{
    static constexpr std::array<double, 4> low_weights = {0.60, 0.32, 0.06, 0.02};
    const double u = rng.uniform();
    double cumulative = 0.0;
    for (int level = 0; level < 3; ++level) {
        // High mirrors Low: P(level) = low_weights[3 - level].
        const auto index = static_cast<std::size_t>(dist == BiosecurityDistribution::Low ? level : 3 - level);
        cumulative += low_weights[index];
        if (u < cumulative) {
            return BiosecurityLevel(level);
        }
    }
    return BiosecurityLevel(3);
}

void assign_biosecurity(std::span<FacilityState> facilities, BiosecurityDistribution dist, CounterRng& rng)
{
    for (auto& f : facilities) {
        if (!f.is_player) {
            f.biosecurity = draw_biosecurity(dist, rng);
        }
    }
}

void seed_initial_infection(WorldState& state, CounterRng& rng)
{
    if (state.infected_count() != 0) {
        throw_contract_violation("initial infection seeded into an already infected world");
    }
    const auto n      = state.facilities.size();
    auto pick         = static_cast<int>(rng.below(n - 1));
    if (pick >= state.player_id) {
        ++pick;
    }
    state.facilities[static_cast<std::size_t>(pick)].infected = true;
}

double transmission_probability(const FacilityState& source, const FacilityState& target, double rate,
                                const TransmissionKernel& kernel)
{
    return kernel.contact_probability(rate, distance(source.position, target.position), target.biosecurity);
}

double infection_probability(const WorldState& state, int target_id, double rate, const TransmissionKernel& kernel)
{
    const auto& target = state.facilities[static_cast<std::size_t>(target_id)];
    double escape      = 1.0;
    for (const auto& source : state.facilities) {
        if (source.infected && source.id != target_id) {
            escape *= 1.0 - transmission_probability(source, target, rate, kernel);
        }
    }
    return 1.0 - escape;
}

namespace
{

void fold_new_sources(WorldState& state, const RoundConfig& config)
{
    auto& cache    = state.cache;
    const auto n   = state.facilities.size();
    if (cache.escape.size() != n) {
        cache.escape.assign(n, 1.0);
        cache.folded.assign(n, 0);
    }
    for (std::size_t s = 0; s < n; ++s) {
        const auto& source = state.facilities[s];
        if (!source.infected || cache.folded[s]) {
            continue;
        }
        cache.folded[s] = 1;
        for (std::size_t t = 0; t < n; ++t) {
            const auto& target = state.facilities[t];
            if (t == s || target.infected || target.is_player) {
                continue;
            }
            cache.escape[t] *= 1.0 - transmission_probability(source, target, config.infection_rate, config.kernel);
        }
    }
}

} // namespace

MonthOutcome step_month(WorldState& state, Action action, const RoundConfig& config, CounterRng& rng)
{
    if (state.round_over) {
        throw_contract_violation("step_month called on a finished round");
    }
    MonthOutcome outcome;
    ++state.month;

    auto& player = state.facilities[static_cast<std::size_t>(state.player_id)];
    if (action == Action::Upgrade) {
        if (player.biosecurity.is_max()) {
            outcome.upgrade_ignored = true;
            outcome.events.push_back({MonthEvent::Kind::UpgradeIgnored, player.id, state.month});
        }
        else {
            player.biosecurity = player.biosecurity.upgraded();
        }
    }

    fold_new_sources(state, config);
    outcome.player_probability = infection_probability(state, state.player_id, config.infection_rate, config.kernel);

    std::vector<int> newly_infected;
    // One draw per facility, infected or not, so draw n of a month always
    // belongs to facility n.
    for (const auto& f : state.facilities) {
        const double u = rng.uniform();
        if (f.infected) {
            continue;
        }
        const double p = f.is_player ? outcome.player_probability
                                     : 1.0 - state.cache.escape[static_cast<std::size_t>(f.id)];
        if (u < p) {
            newly_infected.push_back(f.id);
        }
    }
    for (int id : newly_infected) {
        auto& f    = state.facilities[static_cast<std::size_t>(id)];
        f.infected = true;
        outcome.events.push_back({MonthEvent::Kind::Infection, id, state.month});
        if (f.is_player) {
            state.player_infected = true;
        }
    }
    if (state.player_infected || state.month >= state.months) {
        state.round_over = true;
    }
    return outcome;
}

Observation observe(const WorldState& state, const RoundConfig& config)
{
    const bool infection   = shows_infection(config.visibility);
    const bool biosecurity = shows_biosecurity(config.visibility);

    Observation obs{state.month + 1,
                    state.months,
                    config.infection_rate,
                    config.visibility,
                    state.player_id,
                    state.player().biosecurity,
                    std::nullopt,
                    {}};
    if (infection) {
        obs.infected_count = state.infected_count();
    }
    obs.facilities.reserve(state.facilities.size());
    for (const auto& f : state.facilities) {
        FacilityView view{f.id, f.position, f.is_player, std::nullopt, std::nullopt};
        if (infection) {
            view.infected = f.infected;
        }
        if (biosecurity || f.is_player) {
            view.biosecurity = f.biosecurity.value();
        }
        obs.facilities.push_back(view);
    }
    return obs;
}

std::string serialize(const RoundResult& result)
{
    std::string out = fmt::format("payout={} months={} infected={} final={}\n", result.payout,
                                  result.months_played, result.player_infected, result.final_level.value());
    for (const auto& r : result.records) {
        out += fmt::format("{} {} {} {} {} {}\n", r.month, to_string(r.action), r.level_after.value(),
                           r.infected_this_month, r.upgrade_ignored,
                           r.visible_infected ? std::to_string(*r.visible_infected) : std::string("-"));
    }
    return out;
}

RoundEngine::RoundEngine(RoundConfig config, CounterRng world_rng, EconomicsConstants economics)
    : m_config(std::move(config))
    , m_economics(economics)
    , m_rng(world_rng)
{
    m_config.validate();
    m_world.months     = m_config.months;
    m_world.facilities = generate_layout(m_rng, m_config.facilities);
    m_world.player_id  = 0;
    assign_biosecurity(m_world.facilities, m_config.distribution, m_rng);
    seed_initial_infection(m_world, m_rng);
}

Observation RoundEngine::observe() const
{
    return fieldlab::observe(m_world, m_config);
}

RoundEngine::Step RoundEngine::step(Action action)
{
    const auto visible = observe().infected_count;
    auto outcome       = step_month(m_world, action, m_config, m_rng);
    MonthRecord record{m_world.month,          action, m_world.player().biosecurity, m_world.player_infected,
                       outcome.upgrade_ignored, visible};
    m_records.push_back(record);
    return {record, std::move(outcome)};
}

double RoundEngine::payout() const
{
    if (!over()) {
        throw_contract_violation("round payout requested before the round ended");
    }
    if (m_world.player_infected) {
        return -m_economics.infection_penalty;
    }
    return m_economics.survival_payout(m_world.player().biosecurity);
}

RoundResult RoundEngine::result() const
{
    return {m_records, payout(), static_cast<int>(m_records.size()), m_world.player_infected,
            m_world.player().biosecurity};
}

RoundResult play_round(const RoundConfig& config, const DecisionPolicy& policy, const CounterRng& rng,
                       const EconomicsConstants& economics)
{
    RoundEngine engine(config, rng.split(0), economics);
    auto policy_rng = rng.split(1);
    while (!engine.over()) {
        engine.step(policy(engine.observe(), policy_rng));
    }
    return engine.result();
}

} // namespace fieldlab
