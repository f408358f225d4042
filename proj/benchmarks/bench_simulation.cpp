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
#include "fieldlab/policy.h"
#include "fieldlab/random.h"
#include "fieldlab/schedule.h"
#include "fieldlab/simulation.h"

#include <benchmark/benchmark.h>

using namespace fieldlab;

namespace
{

PolicySpec noisy(PolicyKind kind, double epsilon)
{
    PolicySpec p;
    p.kind             = kind;
    p.flip_probability = epsilon;
    return p;
}

void BM_CounterRng(benchmark::State& state)
{
    CounterRng rng(1);
    double sum = 0.0;
    for (auto _ : state) {
        sum += rng.uniform();
    }
    benchmark::DoNotOptimize(sum);
}
BENCHMARK(BM_CounterRng);

void BM_PlayRound(benchmark::State& state)
{
    RoundConfig config;
    config.infection_rate = 0.3;
    const auto policy     = make_policy(noisy(PolicyKind::Opportunistic, 0.0));
    std::uint64_t seed    = 0;
    for (auto _ : state) {
        config.seed = substream_key(7, seed++);
        benchmark::DoNotOptimize(play_round(config, policy, CounterRng(config.seed)));
    }
}
BENCHMARK(BM_PlayRound);

void BM_ProbeLevels(benchmark::State& state)
{
    RoundConfig config;
    config.infection_rate = 0.3;
    config.seed           = 11;
    for (auto _ : state) {
        benchmark::DoNotOptimize(estimate_probe_levels(config, state.range(0), true));
    }
    state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_ProbeLevels)->Arg(1000)->Arg(10000)->Unit(benchmark::kMillisecond);

void BM_SynthSession(benchmark::State& state)
{
    auto spec = CohortSpec{};
    spec.groups.push_back({noisy(PolicyKind::RiskAverse, 0.05), 1});
    for (auto _ : state) {
        spec.seed++;
        benchmark::DoNotOptimize(synth_cohort(spec));
    }
}
BENCHMARK(BM_SynthSession)->Unit(benchmark::kMicrosecond);

} // namespace
