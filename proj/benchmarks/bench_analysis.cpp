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
#include "fieldlab/cluster.h"
#include "fieldlab/pipeline.h"
#include "fieldlab/policy.h"
#include "fieldlab/random.h"
#include "fieldlab/stats.h"

#include <benchmark/benchmark.h>

#include <cmath>
#include <vector>

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

std::vector<double> sample(std::uint64_t seed, std::size_t n)
{
    CounterRng rng(seed);
    std::vector<double> x(n);
    for (auto& v : x) {
        v = std::round(rng.uniform() * 150.0) / 60.0;
    }
    return x;
}

void BM_MannWhitney(benchmark::State& state)
{
    const auto n = static_cast<std::size_t>(state.range(0));
    auto a = sample(1, n), b = sample(2, n);
    for (auto _ : state) {
        benchmark::DoNotOptimize(mann_whitney_u(a, b, Alternative::Greater));
    }
}
BENCHMARK(BM_MannWhitney)->Arg(8)->Arg(1000)->Arg(100000);

void BM_KsTwoSample(benchmark::State& state)
{
    const auto n = static_cast<std::size_t>(state.range(0));
    auto a = sample(3, n), b = sample(4, n);
    for (auto _ : state) {
        benchmark::DoNotOptimize(ks_two_sample(a, b));
    }
}
BENCHMARK(BM_KsTwoSample)->Arg(8)->Arg(1000)->Arg(100000);

std::vector<Point> blobs(std::size_t n)
{
    CounterRng rng(5);
    const Point centres[] = {{2.5, 2.5}, {0.0, 0.1}, {0.1, 2.4}};
    std::vector<Point> points;
    for (std::size_t i = 0; i < n; ++i) {
        const auto& c = centres[i % 3];
        points.push_back({c[0] + 0.2 * (rng.uniform() - 0.5), c[1] + 0.2 * (rng.uniform() - 0.5)});
    }
    return points;
}

void BM_Kmeans(benchmark::State& state)
{
    const auto points = blobs(static_cast<std::size_t>(state.range(0)));
    for (auto _ : state) {
        benchmark::DoNotOptimize(kmeans(points, 3, 1, 10));
    }
}
BENCHMARK(BM_Kmeans)->Arg(1000)->Arg(10000)->Unit(benchmark::kMillisecond);

void BM_SseCurve(benchmark::State& state)
{
    const auto points = blobs(1000);
    const std::vector<int> ks = {1, 2, 3, 4, 5, 6, 7, 8};
    for (auto _ : state) {
        benchmark::DoNotOptimize(select_k_elbow(sse_curve(points, ks, 1, 10)));
    }
}
BENCHMARK(BM_SseCurve)->Unit(benchmark::kMillisecond);

void BM_AnalyzeExp1(benchmark::State& state)
{
    CohortSpec spec;
    spec.seed = 9;
    for (auto kind : {PolicyKind::RiskAverse, PolicyKind::RiskTolerant, PolicyKind::Opportunistic}) {
        spec.groups.push_back({noisy(kind, 0.05), static_cast<int>(state.range(0))});
    }
    const auto sessions = synth_cohort(spec);
    for (auto _ : state) {
        benchmark::DoNotOptimize(analyze_exp1(sessions));
    }
}
BENCHMARK(BM_AnalyzeExp1)->Arg(100)->Unit(benchmark::kMillisecond);

} // namespace

BENCHMARK_MAIN();
