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
#include "fieldlab/random.h"
#include "fieldlab/stats.h"

#include "test_support.h"

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <set>

using namespace fieldlab;
using fieldlab::testkit::ecdf_sweep_d;
using fieldlab::testkit::enumerate_oracle;
using fieldlab::testkit::normals;
using fieldlab::testkit::pair_count_u;

namespace
{

// Reference values below come from scipy 1.15 (mannwhitneyu with the
// asymptotic method, kolmogorov survival function, normaltest).

std::vector<double> sample_a()
{
    std::vector<double> a;
    for (int i = 0; i < 22; ++i) {
        a.push_back(0.1 + 0.4 * i);
    }
    return a;
}

const std::vector<double> sample_b = {0.3, 0.7, 1.2, 1.9, 2.2, 2.6, 3.4, 3.8, 4.6, 5.2, 5.9,
                                      6.6, 7.1, 7.9, 8.8, 9.4, 9.9, 10.5, 11.2, 12.0, 12.5, 13.1};
const std::vector<double> tied_t = {0, 0, 0, 1, 1, 1.5, 2, 2, 2.5, 2.5, 2.5, 0, 1, 2, 2.5, 0.5, 0.5, 1, 1, 2};
const std::vector<double> tied_u = {2.5, 2.5, 2.5, 2, 2, 2, 1.5, 1.5, 0, 0, 1, 2.5, 2.5, 2, 1, 1, 0.5, 2.5, 2.5, 2};

const std::vector<double> normal_x = {
    2.040919,  -2.555665, 0.418099,  -0.567770, -0.452649, -0.215597, -2.019986, -0.231932, -0.865213, 3.323000,
    0.225787,  -0.352631, -0.281287, -0.668046, -1.055151, -0.390801, 0.481945,  -0.238554, 0.957759,  -0.199802,
    0.024260,  1.545821,  0.545106,  -0.505229, -0.182839, 0.540525,  1.935088,  -0.269620, -0.243559, 1.002314,
    -0.886460, -0.291720, 0.882539,  0.580350,  0.091517,  0.670104,  -2.828162, 1.021307,  -0.959645, -1.668620,
    0.276446,  0.700545,  -0.444767, -1.076406, 0.026125,  -0.052747, 1.405598,  0.747408,  0.193816,  1.111633};
const std::vector<double> normal_y = {
    0.094477,  -0.625900, 0.884058,  0.882538,  0.085171,  -0.482809, 0.529154,  -2.193894, 0.990125,  0.791368,
    -1.338857, 0.361354,  -0.664100, 1.057221,  -1.734167, -0.614495, 1.009580,  1.456401,  -1.858005, -0.198040,
    0.628020,  -0.309216, 1.890640,  -0.891227, 0.654532,  -0.748406, 1.705963,  0.278349,  -0.072251, -1.418185,
    1.981826,  1.052779,  1.053564,  1.437881,  0.649227,  -0.339247, -0.500241, -0.500200, 1.670072,  -1.160381,
    -0.296370, -0.021244, 0.524619,  0.875349,  -0.949097, -1.430013, 0.295586,  1.513564,  1.057058,  0.515651,
    -0.017156, 0.593234,  0.056665,  1.117207,  -0.494447, 0.434240,  0.189220,  0.843359,  0.524639,  2.850035};

std::vector<double> grid_sample(CounterRng& rng, std::size_t n)
{
    // coarse grid so ties are common
    std::vector<double> s;
    for (std::size_t i = 0; i < n; ++i) {
        s.push_back(0.5 * static_cast<double>(rng.below(6)));
    }
    return s;
}


} // namespace

TEST(TestKolmogorov, SurvivalFunction)
{
    EXPECT_EQ(kolmogorov_sf(0.0), 1.0);
    EXPECT_NEAR(kolmogorov_sf(0.5), 0.9639452436648751, 1e-12);
    EXPECT_NEAR(kolmogorov_sf(0.8), 0.5441424115741981, 1e-12);
    EXPECT_NEAR(kolmogorov_sf(1.0), 0.26999967167735456, 1e-12);
    EXPECT_NEAR(kolmogorov_sf(1.18), 0.1234538094297657, 1e-12);
    EXPECT_NEAR(kolmogorov_sf(1.36), 0.049485876755377876, 1e-12);
    EXPECT_NEAR(kolmogorov_sf(2.0), 0.0006709252557796953, 1e-14);
    // both series agree at the switch point
    EXPECT_NEAR(kolmogorov_sf(1.18 - 1e-9), kolmogorov_sf(1.18), 1e-8);
}

TEST(TestMannWhitney, SpecExamples)
{
    std::vector<double> x = {1, 2, 3};
    auto same = mann_whitney_u(x, x);
    EXPECT_EQ(same.statistic, 4.5);
    EXPECT_EQ(same.p_value, 1.0);

    std::vector<double> y = {4, 5, 6};
    auto less = mann_whitney_u(x, y, Alternative::Less);
    EXPECT_EQ(less.statistic, 0.0);
    EXPECT_DOUBLE_EQ(less.p_value, 0.05);
    EXPECT_EQ(less.method, "mann-whitney-exact");
    EXPECT_EQ(less.tails(), Tails::One);
    EXPECT_EQ(mann_whitney_u(x, y).tails(), Tails::Two);

    EXPECT_THROW(mann_whitney_u(std::vector<double>{}, y), InsufficientSample);
}

TEST(TestMannWhitney, MatchesScipyAsymptotic)
{
    auto a   = sample_a();
    auto two = mann_whitney_u(a, sample_b);
    EXPECT_EQ(two.statistic, 170.0);
    EXPECT_NEAR(two.p_value, 0.09328995618360462, 1e-12);
    EXPECT_EQ(two.method, "mann-whitney-normal");
    auto less = mann_whitney_u(a, sample_b, Alternative::Less);
    EXPECT_NEAR(less.p_value, 0.04664497809180231, 1e-12);

    auto tied = mann_whitney_u(tied_t, tied_u);
    EXPECT_EQ(tied.statistic, 146.5);
    EXPECT_NEAR(tied.p_value, 0.14261316985329453, 1e-12);

    auto g = mann_whitney_u(normal_x, normal_y, Alternative::Greater);
    EXPECT_EQ(g.statistic, 1316.0);
    EXPECT_NEAR(g.p_value, 0.8659727422775644, 1e-12);
    EXPECT_EQ(g.n1, 50u);
    EXPECT_EQ(g.n2, 60u);
}

TEST(TestMannWhitney, ExhaustiveEnumerationOracle)
{
    CounterRng rng(2718);
    int pairs = 0;
    for (std::size_t n1 = 1; n1 <= 6; ++n1) {
        for (std::size_t n2 = 1; n2 <= 6; ++n2) {
            for (int rep = 0; rep < 9; ++rep, ++pairs) {
                auto a = grid_sample(rng, n1);
                auto b = grid_sample(rng, n2);
                auto oracle = enumerate_oracle(a, b);
                EXPECT_EQ(mann_whitney_u(a, b).statistic, pair_count_u(a, b));
                EXPECT_DOUBLE_EQ(mann_whitney_u(a, b, Alternative::Less).p_value, oracle.p_less);
                EXPECT_DOUBLE_EQ(mann_whitney_u(a, b, Alternative::Greater).p_value, oracle.p_greater);
                EXPECT_DOUBLE_EQ(mann_whitney_u(a, b, Alternative::TwoSided).p_value, oracle.p_two);
            }
        }
    }
    EXPECT_EQ(pairs, 324);
}

TEST(TestMannWhitney, RankTransformInvariance)
{
    CounterRng rng(5);
    for (int rep = 0; rep < 50; ++rep) {
        auto a = grid_sample(rng, 30);
        auto b = grid_sample(rng, 25);
        auto fa = a, fb = b;
        for (auto* s : {&fa, &fb}) {
            for (auto& v : *s) {
                v = std::exp(3.0 * v) - 7.0;
            }
        }
        auto r1 = mann_whitney_u(a, b);
        auto r2 = mann_whitney_u(fa, fb);
        EXPECT_EQ(r1.statistic, r2.statistic);
        EXPECT_EQ(r1.p_value, r2.p_value);
    }
}

TEST(TestMannWhitney, ExactAndNormalAgreeAtEight)
{
    CounterRng rng(8);
    double worst = 0.0;
    for (int rep = 0; rep < 200; ++rep) {
        auto a = normals(rng, 8);
        auto b = normals(rng, 8);
        auto e = mann_whitney_u(a, b, Alternative::TwoSided, PValueMethod::Exact);
        auto n = mann_whitney_u(a, b, Alternative::TwoSided, PValueMethod::Asymptotic);
        worst  = std::max(worst, std::abs(e.p_value - n.p_value));
    }
    EXPECT_LE(worst, 0.03);
}

TEST(TestMannWhitney, IdenticalSamplesHalfProduct)
{
    CounterRng rng(13);
    for (std::size_t n : {1u, 5u, 20u, 200u}) {
        auto a = normals(rng, n);
        EXPECT_EQ(mann_whitney_u(a, a).statistic, static_cast<double>(n * n) / 2.0);
    }
}

TEST(TestMannWhitney, ConstantPooledSample)
{
    std::vector<double> a(30, 1.0), b(40, 1.0);
    auto r = mann_whitney_u(a, b);
    EXPECT_EQ(r.statistic, 600.0);
    EXPECT_EQ(r.p_value, 1.0);
}

TEST(TestKs, SpecExamples)
{
    std::vector<double> a = {1, 2, 3, 4}, b = {3, 4, 5, 6}, c = {5, 6, 7, 8};
    auto same = ks_two_sample(a, a);
    EXPECT_EQ(same.statistic, 0.0);
    EXPECT_EQ(same.p_value, 1.0);
    auto overlap = ks_two_sample(a, b);
    EXPECT_EQ(overlap.statistic, 0.5);
    // 54 of the 70 splits reach D >= 0.5
    EXPECT_DOUBLE_EQ(overlap.p_value, 54.0 / 70.0);
    auto apart = ks_two_sample(a, c);
    EXPECT_EQ(apart.statistic, 1.0);
    EXPECT_DOUBLE_EQ(apart.p_value, 2.0 / 70.0);
    EXPECT_THROW(ks_two_sample(a, std::vector<double>{}), InsufficientSample);
}

TEST(TestKs, MatchesKolmogorovLimit)
{
    auto ab = ks_two_sample(sample_a(), sample_b);
    EXPECT_NEAR(ab.statistic, 0.36363636363636365, 1e-15);
    EXPECT_NEAR(ab.p_value, 0.10903287403762188, 1e-12);
    EXPECT_EQ(ab.method, "ks-asymptotic");
    auto xy = ks_two_sample(normal_x, normal_y);
    EXPECT_NEAR(xy.statistic, 0.17333333333333334, 1e-15);
    EXPECT_NEAR(xy.p_value, 0.38558587606701666, 1e-12);
}

TEST(TestKs, ExhaustiveEnumerationOracle)
{
    CounterRng rng(3141);
    for (std::size_t n1 = 1; n1 <= 6; ++n1) {
        for (std::size_t n2 = 1; n2 <= 6; ++n2) {
            for (int rep = 0; rep < 9; ++rep) {
                auto a      = grid_sample(rng, n1);
                auto b      = grid_sample(rng, n2);
                auto oracle = enumerate_oracle(a, b);
                auto r      = ks_two_sample(a, b);
                EXPECT_EQ(r.statistic, ecdf_sweep_d(a, b));
                EXPECT_DOUBLE_EQ(r.p_value, oracle.p_ks);
            }
        }
    }
}

TEST(TestKs, TransformInvarianceAndRange)
{
    CounterRng rng(77);
    for (int rep = 0; rep < 100; ++rep) {
        auto a = normals(rng, 15 + static_cast<std::size_t>(rep % 7));
        auto b = normals(rng, 12);
        auto fa = a, fb = b;
        for (auto* s : {&fa, &fb}) {
            for (auto& v : *s) {
                v = v * v * v + 2.0 * v;
            }
        }
        auto r = ks_two_sample(a, b);
        EXPECT_EQ(r.statistic, ks_two_sample(fa, fb).statistic);
        EXPECT_GE(r.statistic, 0.0);
        EXPECT_LE(r.statistic, 1.0);
        EXPECT_GE(r.p_value, 0.0);
        EXPECT_LE(r.p_value, 1.0);
    }
}

TEST(TestKs, OneSample)
{
    auto r = ks_one_sample(normal_x, normal_cdf);
    EXPECT_NEAR(r.statistic, 0.08669900199060218, 1e-12);
    EXPECT_NEAR(r.p_value, kolmogorov_sf(std::sqrt(50.0) * r.statistic), 1e-15);
    auto uniform = ks_one_sample(std::vector<double>{0.1, 0.3, 0.5, 0.7, 0.9}, [](double v) { return v; });
    EXPECT_NEAR(uniform.statistic, 0.1, 1e-15);
}

TEST(TestKl, Examples)
{
    std::vector<double> p = {0.2, 0.3, 0.5};
    EXPECT_NEAR(kl_divergence(p, p), 0.0, 1e-12);
    std::vector<double> one = {1.0, 0.0}, half = {0.5, 0.5};
    EXPECT_NEAR(kl_divergence(one, half), std::log(2.0), 1e-6);
    EXPECT_THROW(kl_divergence(one, p), InvalidConfig);
    std::vector<double> bad = {0.5, 0.6};
    EXPECT_THROW(kl_divergence(bad, half), ContractViolation);
    std::vector<double> q = {0.25, 0.25, 0.5};
    const double exact = 0.2 * std::log(0.2 / 0.25) + 0.3 * std::log(0.3 / 0.25);
    EXPECT_NEAR(kl_divergence(p, q, 0.0), exact, 1e-15);
}

TEST(TestKl, NonNegativeOnRandomPairs)
{
    CounterRng rng(4);
    for (int rep = 0; rep < 100000; ++rep) {
        std::array<double, 6> p{}, q{};
        double sp = 0.0, sq = 0.0;
        for (std::size_t i = 0; i < 6; ++i) {
            // some exact zeros
            p[i] = rng.uniform() < 0.2 ? 0.0 : rng.uniform();
            q[i] = rng.uniform() < 0.2 ? 0.0 : rng.uniform();
            sp += p[i];
            sq += q[i];
        }
        if (sp == 0.0 || sq == 0.0) {
            continue;
        }
        for (std::size_t i = 0; i < 6; ++i) {
            p[i] /= sp;
            q[i] /= sq;
        }
        ASSERT_GE(kl_divergence(p, q), 0.0);
        ASSERT_NEAR(kl_divergence(p, p), 0.0, 1e-12);
    }
}

TEST(TestDagostino, MatchesScipy)
{
    auto x = dagostino_pearson(normal_x);
    EXPECT_NEAR(x.statistic, 3.6198962387908624, 1e-10);
    EXPECT_NEAR(x.p_value, 0.16366262749851085, 1e-10);
    std::vector<double> xy(normal_x);
    xy.insert(xy.end(), normal_y.begin(), normal_y.end());
    auto r = dagostino_pearson(xy);
    EXPECT_NEAR(r.statistic, 1.945557742313279, 1e-10);
    EXPECT_NEAR(r.p_value, 0.37803107749129095, 1e-10);
}

TEST(TestDagostino, BimodalRejectsAndGuards)
{
    CounterRng rng(10);
    auto s = normals(rng, 1000);
    for (std::size_t i = 0; i < s.size(); ++i) {
        s[i] += i % 2 == 0 ? -6.0 : 6.0;
    }
    EXPECT_LT(dagostino_pearson(s).p_value, 0.001);
    EXPECT_THROW(dagostino_pearson(std::vector<double>(10, 0.5)), InsufficientSample);
    EXPECT_THROW(dagostino_pearson(std::vector<double>(30, 0.5)), DataError);
}

TEST(TestDescriptive, Examples)
{
    auto flat = descriptive(std::vector<double>{2.5, 2.5, 2.5});
    EXPECT_EQ(flat.mean, 2.5);
    EXPECT_EQ(flat.median, 2.5);
    EXPECT_EQ(flat.sd, 0.0);
    EXPECT_EQ(flat.min, 2.5);
    EXPECT_EQ(flat.max, 2.5);
    auto d = descriptive(std::vector<double>{3, 0, 2, 1});
    EXPECT_EQ(d.mean, 1.5);
    EXPECT_EQ(d.median, 1.5);
    EXPECT_NEAR(d.sd, 1.2910, 5e-5);
    EXPECT_EQ(d.min, 0.0);
    EXPECT_EQ(d.max, 3.0);
    EXPECT_EQ(descriptive(std::vector<double>{4.0}).sd, 0.0);
    EXPECT_THROW(descriptive(std::vector<double>{}), InsufficientSample);
}

TEST(TestDescriptive, SummaryTuple)
{
    Descriptive d;
    d.median = 1.4;
    d.mean   = 1.4;
    d.sd     = 0.62;
    d.min    = 0.0;
    d.max    = 2.5;
    EXPECT_EQ(format_summary(d), "{median=1.40, mu=1.40, sigma=0.62, min = 0, max = 2.50}");
    EXPECT_EQ(format_reported(0.0), "0");
    EXPECT_EQ(format_reported(0.004), "0.00");
}

TEST(TestStats, Deterministic)
{
    auto a = mann_whitney_u(normal_x, normal_y);
    auto b = mann_whitney_u(normal_x, normal_y);
    EXPECT_EQ(a.p_value, b.p_value);
    EXPECT_EQ(ks_two_sample(normal_x, normal_y).p_value, ks_two_sample(normal_x, normal_y).p_value);
}
