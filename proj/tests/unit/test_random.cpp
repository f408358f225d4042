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
#include "fieldlab/random.h"

#include <gtest/gtest.h>

#include <array>
#include <set>

using namespace fieldlab;

TEST(TestRandom, MatchesSplitMix64ReferenceSequence)
{
    // seed 0 keys the stream at 0, so the outputs are SplitMix64's own.
    CounterRng rng(0);
    EXPECT_EQ(rng(), 0xE220A8397B1DCDAFULL);
    EXPECT_EQ(rng(), 0x6E789E6AA1B965F4ULL);
    EXPECT_EQ(rng(), 0x06C45D188009454FULL);
    EXPECT_EQ(rng.counter(), 3u);
}

TEST(TestRandom, SameSeedSameStream)
{
    CounterRng a(42), b(42), c(43);
    bool differs = false;
    for (int i = 0; i < 100; ++i) {
        auto x = a();
        EXPECT_EQ(x, b());
        differs |= x != c();
    }
    EXPECT_TRUE(differs);
}

TEST(TestRandom, SplitLeavesParentUntouched)
{
    CounterRng parent(7);
    parent();
    auto before = parent;
    auto child0 = parent.split(0);
    auto child1 = parent.split(1);
    EXPECT_EQ(parent, before);
    EXPECT_NE(child0.key(), child1.key());
    EXPECT_NE(child0.key(), parent.key());
    EXPECT_EQ(parent.split(0), child0);
}

TEST(TestRandom, SubstreamKeysAreDistinct)
{
    std::set<std::uint64_t> keys;
    for (std::uint64_t s = 0; s < 20; ++s) {
        for (std::uint64_t r = 0; r < 50; ++r) {
            keys.insert(substream_key(s, r));
        }
    }
    EXPECT_EQ(keys.size(), 1000u);
}

TEST(TestRandom, UniformInUnitInterval)
{
    CounterRng rng(3);
    double sum = 0.0;
    const int n = 200000;
    for (int i = 0; i < n; ++i) {
        double u = rng.uniform();
        ASSERT_GE(u, 0.0);
        ASSERT_LT(u, 1.0);
        sum += u;
    }
    // sd of the mean is 1/sqrt(12 n) ~ 6.5e-4
    EXPECT_NEAR(sum / n, 0.5, 0.003);
}

TEST(TestRandom, BelowIsBoundedAndRoughlyUniform)
{
    CounterRng rng(11);
    std::array<int, 7> counts{};
    const int n = 70000;
    for (int i = 0; i < n; ++i) {
        auto v = rng.below(7);
        ASSERT_LT(v, 7u);
        ++counts[v];
    }
    for (int c : counts) {
        EXPECT_NEAR(c, n / 7, 400);
    }
    EXPECT_EQ(rng.below(1), 0u);
}
