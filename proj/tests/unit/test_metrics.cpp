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
#include "fieldlab/errors.h"
#include "fieldlab/metrics.h"

#include <gtest/gtest.h>

#include <cmath>

using namespace fieldlab;

namespace
{

std::vector<int> levels_from_upgrades(const std::vector<bool>& upgrades)
{
    std::vector<int> levels;
    int level = 0;
    for (bool u : upgrades) {
        if (u && level < 3) {
            ++level;
        }
        levels.push_back(level);
    }
    return levels;
}

double rating_of(const std::vector<int>& levels)
{
    return adoption_rating(levels).value();
}

} // namespace

TEST(TestAdoptionRating, Examples)
{
    EXPECT_EQ(rating_of({0, 0, 0, 0, 0, 0}), 0.0);
    EXPECT_EQ(rating_of({1, 2, 3, 3, 3, 3}), 2.5);
    EXPECT_EQ(rating_of({1, 2}), 1.5);
    auto r = adoption_rating(std::vector<int>{0, 1, 1});
    EXPECT_EQ(r.level_sum, 2);
    EXPECT_EQ(r.decisions, 3);
}

TEST(TestAdoptionRating, Errors)
{
    EXPECT_THROW(adoption_rating(std::vector<int>{}), UndefinedRating);
    EXPECT_THROW(adoption_rating(std::vector<int>{1, 0}), ContractViolation);
    EXPECT_THROW(adoption_rating(std::vector<int>{2}), ContractViolation);
    EXPECT_THROW(adoption_rating(std::vector<int>{0, 2}), ContractViolation);
    EXPECT_THROW(adoption_rating(std::vector<int>{1, 2, 3, 4}), ContractViolation);
    EXPECT_THROW(pool(std::vector<AdoptionRating>{}), UndefinedRating);
}

TEST(TestAdoptionRating, BoundsOverRandomVectors)
{
    CounterRng rng(1);
    for (int i = 0; i < 10000; ++i) {
        const auto months = 1 + static_cast<int>(rng.below(6));
        std::vector<bool> ups;
        for (int m = 0; m < months; ++m) {
            ups.push_back(rng.uniform() < 0.5);
        }
        const double v = rating_of(levels_from_upgrades(ups));
        ASSERT_GE(v, 0.0);
        ASSERT_LE(v, 2.5);
    }
}

TEST(TestAdoptionRating, EarlierInvestmentScoresHigher)
{
    CounterRng rng(2);
    int checked = 0;
    for (int i = 0; i < 5000; ++i) {
        const auto months = 2 + static_cast<int>(rng.below(5));
        const auto k      = 1 + static_cast<int>(rng.below(3));
        if (k >= months) {
            continue;
        }
        // a upgrades in months 1..k; b moves its last upgrade later
        std::vector<bool> a(static_cast<std::size_t>(months), false), b(a);
        for (int m = 0; m < k; ++m) {
            a[static_cast<std::size_t>(m)] = true;
            b[static_cast<std::size_t>(m)] = true;
        }
        const auto later = k + static_cast<int>(rng.below(static_cast<std::uint64_t>(months - k)));
        b[static_cast<std::size_t>(k - 1)]  = false;
        b[static_cast<std::size_t>(later)] = true;
        EXPECT_GT(rating_of(levels_from_upgrades(a)), rating_of(levels_from_upgrades(b)));
        ++checked;
    }
    EXPECT_GT(checked, 1000);
}

TEST(TestAdoptionRating, PoolsByDecisionCount)
{
    std::vector<AdoptionRating> rounds = {adoption_rating(std::vector<int>{1, 2, 3, 3, 3, 3}),
                                          adoption_rating(std::vector<int>{0})};
    // (15 + 0) / 7, not the mean of 2.5 and 0
    EXPECT_DOUBLE_EQ(pool(rounds).value(), 15.0 / 7.0);
}

TEST(TestRateBand, Thresholds)
{
    EXPECT_EQ(rate_band(0.08), RateBand::Low);
    EXPECT_EQ(rate_band(0.3), RateBand::High);
    EXPECT_EQ(rate_band(0.15), RateBand::Intermediate);
}

TEST(TestExpectedReturn, Examples)
{
    EXPECT_EQ(expected_return(BiosecurityLevel(0), 0.0), 15000.0);
    EXPECT_EQ(expected_return(BiosecurityLevel(0), 1.0), -25000.0);
    EXPECT_NEAR(expected_return(BiosecurityLevel(3), 0.193), 4859.00, 1e-9);
    EXPECT_THROW(expected_return(BiosecurityLevel(0), 1.5), InvalidConfig);
}

TEST(TestExpectedReturn, PublishedTableFromItsOwnPercentages)
{
    // The dollar column follows from the printed probabilities up to their
    // rounding to 0.1%: |error| <= 0.0005 * (E - b + C).
    struct Cell {
        int level;
        double p;
        double dollars;
    };
    const Cell cells[] = {{0, 0.070, 12204.30}, {1, 0.042, 12357.89}, {2, 0.042, 11400.00}, {3, 0.016, 11406.42},
                          {0, 0.418, -1729.22}, {1, 0.411, -2044.30}, {2, 0.332, 400.00},   {3, 0.193, 4857.91}};
    EconomicsConstants econ;
    for (const auto& c : cells) {
        const BiosecurityLevel level(c.level);
        const double slack = 0.0005 * (econ.survival_payout(level) + econ.infection_penalty);
        EXPECT_NEAR(expected_return(level, c.p), c.dollars, slack) << c.level << " " << c.p;
    }
}

TEST(TestExpectedReturn, AffineAndDecreasing)
{
    for (int l = 0; l < 4; ++l) {
        BiosecurityLevel level(l);
        const double a = expected_return(level, 0.1);
        const double b = expected_return(level, 0.2);
        const double c = expected_return(level, 0.3);
        EXPECT_GT(a, b);
        EXPECT_NEAR(a - b, b - c, 1e-9);
    }
    // ordering at the high rate with the printed probabilities
    EXPECT_GT(expected_return(BiosecurityLevel(3), 0.193), expected_return(BiosecurityLevel(2), 0.332));
    EXPECT_GT(expected_return(BiosecurityLevel(2), 0.332), expected_return(BiosecurityLevel(0), 0.418));
    EXPECT_GT(expected_return(BiosecurityLevel(0), 0.418), expected_return(BiosecurityLevel(1), 0.411));
}

TEST(TestEstimate, ZeroRateIsExactlyZero)
{
    RoundConfig config;
    config.infection_rate = 0.0;
    auto e = estimate_infection_prob(config, BiosecurityLevel(0), 500);
    EXPECT_EQ(e.probability, 0.0);
    EXPECT_EQ(e.half_width, 0.0);
    EXPECT_EQ(e.trials, 500);
    EXPECT_THROW(estimate_infection_prob(config, BiosecurityLevel(0), 0), InvalidConfig);
}

TEST(TestEstimate, HalfWidth)
{
    auto e = make_estimate(25, 100);
    EXPECT_EQ(e.probability, 0.25);
    EXPECT_NEAR(e.half_width, 1.96 * std::sqrt(0.25 * 0.75 / 100), 1e-15);
}

TEST(TestEstimate, JointEstimatorMatchesIndividualRuns)
{
    for (double rate : {0.08, 0.3}) {
        for (auto dist : {BiosecurityDistribution::Low, BiosecurityDistribution::High}) {
            RoundConfig config;
            config.infection_rate = rate;
            config.distribution   = dist;
            config.seed           = 321;
            auto joint            = estimate_probe_levels(config, 400);
            for (int l = 0; l < 4; ++l) {
                auto single = estimate_infection_prob(config, BiosecurityLevel(l), 400);
                EXPECT_EQ(joint[static_cast<std::size_t>(l)].infections, single.infections)
                    << "rate " << rate << " level " << l;
            }
        }
    }
}

TEST(TestEstimate, MonotoneInProbeLevel)
{
    RoundConfig config;
    config.infection_rate = 0.3;
    config.seed           = 5;
    auto joint            = estimate_probe_levels(config, 3000, true);
    for (std::size_t l = 1; l < 4; ++l) {
        EXPECT_LE(joint[l].infections, joint[l - 1].infections);
    }
}

TEST(TestEstimate, CalibratedKernelHighRateUnprotected)
{
    RoundConfig config;
    config.infection_rate = 0.3;
    config.seed           = 8;
    auto joint            = estimate_probe_levels(config, 20000, true);
    EXPECT_NEAR(joint[0].probability, 0.418, 0.02);
}

TEST(TestEstimate, SingleSourceClosedForm)
{
    // one infected neighbour at fixed distance, one month
    auto kernel = TransmissionKernel::geometric(0.25, 0.55);
    RoundConfig config;
    config.infection_rate = 0.3;
    config.kernel         = kernel;
    config.months         = 1;
    config.facilities     = 2;
    for (int level = 0; level < 4; ++level) {
        WorldState base;
        base.months = 1;
        base.facilities.resize(2);
        base.facilities[0].id          = 0;
        base.facilities[0].is_player   = true;
        base.facilities[0].biosecurity = BiosecurityLevel(level);
        base.facilities[1].id          = 1;
        base.facilities[1].position    = {0.1, 0.0};
        base.facilities[1].infected    = true;
        const double closed = 0.3 * std::exp(-0.1 / 0.25) * std::pow(0.55, level);
        CounterRng rng(static_cast<std::uint64_t>(level));
        const long trials = 40000;
        long infected     = 0;
        for (long t = 0; t < trials; ++t) {
            auto w = base;
            step_month(w, Action::Hold, config, rng);
            infected += w.player_infected;
        }
        auto e = make_estimate(infected, trials);
        EXPECT_NEAR(e.probability, closed, 3 * std::max(e.half_width, 1e-3)) << "level " << level;
    }
}
