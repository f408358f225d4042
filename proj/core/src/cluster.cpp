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

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <limits>

namespace fieldlab
{

double squared_distance(const Point& a, const Point& b)
{
    const double dx = a[0] - b[0];
    const double dy = a[1] - b[1];
    return dx * dx + dy * dy;
}

std::vector<int> assign_to_centroids(std::span<const Point> points, std::span<const Point> centroids)
{
    std::vector<int> labels(points.size(), 0);
    if (points.empty()) {
        return labels;
    }
    if (centroids.empty()) {
        throw_invalid_config("assignment needs at least one centroid");
    }
    for (std::size_t i = 0; i < points.size(); ++i) {
        double best = std::numeric_limits<double>::infinity();
        for (std::size_t c = 0; c < centroids.size(); ++c) {
            const double d = squared_distance(points[i], centroids[c]);
            if (d < best) {
                best      = d;
                labels[i] = static_cast<int>(c);
            }
        }
    }
    return labels;
}

double compute_sse(std::span<const Point> points, std::span<const Point> centroids, std::span<const int> assignments)
{
    double sse = 0.0;
    for (std::size_t i = 0; i < points.size(); ++i) {
        sse += squared_distance(points[i], centroids[static_cast<std::size_t>(assignments[i])]);
    }
    return sse;
}

ClusterModel lloyd(std::span<const Point> points, std::vector<Point> centroids, int max_iterations,
                   std::vector<double>* sse_trace)
{
    const auto k = centroids.size();
    ClusterModel model;
    model.k           = static_cast<int>(k);
    model.assignments = assign_to_centroids(points, centroids);

    for (int iteration = 0; iteration < max_iterations; ++iteration) {
        if (sse_trace) {
            sse_trace->push_back(compute_sse(points, centroids, model.assignments));
        }
        std::vector<Point> sums(k, Point{0.0, 0.0});
        std::vector<long> sizes(k, 0);
        for (std::size_t i = 0; i < points.size(); ++i) {
            const auto c = static_cast<std::size_t>(model.assignments[i]);
            sums[c][0] += points[i][0];
            sums[c][1] += points[i][1];
            ++sizes[c];
        }
        for (std::size_t c = 0; c < k; ++c) {
            if (sizes[c] > 0) {
                centroids[c] = {sums[c][0] / static_cast<double>(sizes[c]), sums[c][1] / static_cast<double>(sizes[c])};
                continue;
            }
            // Empty cluster: move it onto the point farthest from its centroid.
            std::size_t farthest = 0;
            double worst         = -1.0;
            for (std::size_t i = 0; i < points.size(); ++i) {
                const double d =
                    squared_distance(points[i], centroids[static_cast<std::size_t>(model.assignments[i])]);
                if (d > worst) {
                    worst    = d;
                    farthest = i;
                }
            }
            centroids[c]                 = points[farthest];
            model.assignments[farthest] = static_cast<int>(c);
        }
        auto next = assign_to_centroids(points, centroids);
        if (next == model.assignments) {
            break;
        }
        model.assignments = std::move(next);
    }
    model.centroids = std::move(centroids);
    model.sse       = compute_sse(points, model.centroids, model.assignments);
    if (sse_trace) {
        sse_trace->push_back(model.sse);
    }
    return model;
}

std::vector<Point> kmeanspp_seeds(std::span<const Point> points, int k, CounterRng& rng)
{
    std::vector<Point> seeds;
    seeds.reserve(static_cast<std::size_t>(k));
    seeds.push_back(points[rng.below(points.size())]);
    std::vector<double> d2(points.size(), std::numeric_limits<double>::infinity());
    while (static_cast<int>(seeds.size()) < k) {
        double total = 0.0;
        for (std::size_t i = 0; i < points.size(); ++i) {
            d2[i] = std::min(d2[i], squared_distance(points[i], seeds.back()));
            total += d2[i];
        }
        std::size_t pick = 0;
        if (total > 0.0) {
            double u = rng.uniform() * total;
            for (pick = 0; pick + 1 < points.size(); ++pick) {
                u -= d2[pick];
                if (u < 0.0) {
                    break;
                }
            }
        }
        else {
            pick = rng.below(points.size());
        }
        seeds.push_back(points[pick]);
    }
    return seeds;
}

ClusterModel kmeans(std::span<const Point> points, int k, std::uint64_t seed, int restarts, int max_iterations)
{
    if (k < 1) {
        throw_invalid_config("k-means needs k >= 1");
    }
    if (points.size() < static_cast<std::size_t>(k)) {
        throw_invalid_config(fmt::format("k-means with k={} needs at least {} points, got {}", k, k, points.size()));
    }
    if (restarts < 1) {
        throw_invalid_config("k-means needs at least one restart");
    }
    ClusterModel best;
    best.sse = std::numeric_limits<double>::infinity();
    for (int r = 0; r < restarts; ++r) {
        CounterRng rng = CounterRng(seed).split(static_cast<std::uint64_t>(r));
        auto model     = lloyd(points, kmeanspp_seeds(points, k, rng), max_iterations);
        if (model.sse < best.sse) {
            best = std::move(model);
        }
    }
    return best;
}

std::vector<SsePoint> sse_curve(std::span<const Point> points, std::span<const int> k_values, std::uint64_t seed,
                                int restarts)
{
    if (k_values.empty()) {
        throw_invalid_config("SSE curve needs at least one k");
    }
    std::vector<SsePoint> curve;
    curve.reserve(k_values.size());
    for (int k : k_values) {
        curve.push_back({k, kmeans(points, k, seed, restarts).sse});
    }
    return curve;
}

int select_k_elbow(std::span<const SsePoint> curve)
{
    if (curve.size() < 4) {
        throw_invalid_config("elbow selection needs at least 4 consecutive k values");
    }
    for (std::size_t i = 1; i < curve.size(); ++i) {
        if (curve[i].k != curve[i - 1].k + 1) {
            throw_invalid_config("elbow selection needs consecutive k values");
        }
    }
    auto second_difference = [&](std::size_t i) {
        return curve[i - 1].sse - 2.0 * curve[i].sse + curve[i + 1].sse;
    };
    int best_k        = curve[1].k;
    double best_value = second_difference(1);
    for (std::size_t i = 2; i + 1 < curve.size(); ++i) {
        const double second = second_difference(i);
        // Relative slack so numerically equal second differences tie.
        if (second > best_value + 1e-12 * std::max(1.0, std::abs(best_value))) {
            best_value = second;
            best_k     = curve[i].k;
        }
    }
    return best_k;
}

std::string_view to_string(HistogramNormalization n)
{
    return n == HistogramNormalization::PerCategory ? "per-category" : "per-month";
}

long DecisionHistogram::total(int level) const
{
    long sum = 0;
    for (long c : counts[static_cast<std::size_t>(level)]) {
        sum += c;
    }
    return sum;
}

void normalize_histogram(DecisionHistogram& h)
{
    for (auto& p : h.proportions) {
        p.assign(static_cast<std::size_t>(h.months), 0.0);
    }
    if (h.normalization == HistogramNormalization::PerCategory) {
        for (std::size_t level = 0; level < 4; ++level) {
            const long total = h.total(static_cast<int>(level));
            for (std::size_t m = 0; m < static_cast<std::size_t>(h.months); ++m) {
                h.proportions[level][m] =
                    total > 0 ? static_cast<double>(h.counts[level][m]) / static_cast<double>(total) : 0.0;
            }
        }
    }
    else {
        for (std::size_t m = 0; m < static_cast<std::size_t>(h.months); ++m) {
            long total = 0;
            for (std::size_t level = 0; level < 4; ++level) {
                total += h.counts[level][m];
            }
            for (std::size_t level = 0; level < 4; ++level) {
                h.proportions[level][m] =
                    total > 0 ? static_cast<double>(h.counts[level][m]) / static_cast<double>(total) : 0.0;
            }
        }
    }
}

DecisionHistogram decision_histogram(std::span<const SessionLog* const> sessions, RateBand band, int months,
                                     HistogramNormalization normalization)
{
    DecisionHistogram h;
    h.months        = months;
    h.normalization = normalization;
    for (std::size_t level = 0; level < 4; ++level) {
        h.counts[level].assign(static_cast<std::size_t>(months), 0);
        h.proportions[level].assign(static_cast<std::size_t>(months), 0.0);
    }
    for (const auto* s : sessions) {
        for (const auto& r : s->records) {
            if (rate_band(r.infection_rate) != band || r.month < 1 || r.month > months) {
                continue;
            }
            ++h.counts[static_cast<std::size_t>(r.level_after)][static_cast<std::size_t>(r.month - 1)];
        }
    }
    normalize_histogram(h);
    return h;
}

std::vector<DecisionHistogram> monthly_decision_histograms(std::span<const SessionLog* const> sessions,
                                                           std::span<const int> labels, int k, RateBand band,
                                                           int months, HistogramNormalization normalization)
{
    if (sessions.empty()) {
        throw_invalid_config("histograms need at least one session");
    }
    if (labels.size() != sessions.size()) {
        throw_invalid_config("one cluster label per session is required");
    }
    std::vector<std::vector<const SessionLog*>> groups(static_cast<std::size_t>(k));
    for (std::size_t i = 0; i < sessions.size(); ++i) {
        groups.at(static_cast<std::size_t>(labels[i])).push_back(sessions[i]);
    }
    std::vector<DecisionHistogram> histograms;
    histograms.reserve(groups.size());
    for (const auto& g : groups) {
        histograms.push_back(decision_histogram(g, band, months, normalization));
    }
    return histograms;
}

} // namespace fieldlab
