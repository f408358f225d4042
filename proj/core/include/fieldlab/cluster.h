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
#ifndef FIELDLAB_CLUSTER_H
#define FIELDLAB_CLUSTER_H

#include "fieldlab/metrics.h"
#include "fieldlab/session_log.h"

#include <array>
#include <cstdint>
#include <span>
#include <vector>

namespace fieldlab
{

/// A participant in rating space: (low-rate rating, high-rate rating).
using Point = std::array<double, 2>;

double squared_distance(const Point& a, const Point& b);

struct ClusterModel {
    int k = 0;
    std::vector<Point> centroids;
    std::vector<int> assignments;
    double sse = 0.0;
};

/// Nearest centroid per point; ties go to the lowest index.
std::vector<int> assign_to_centroids(std::span<const Point> points, std::span<const Point> centroids);

double compute_sse(std::span<const Point> points, std::span<const Point> centroids, std::span<const int> assignments);

/**
 * Lloyd iterations from the given centroids until the assignment reaches a
 * fixpoint or max_iterations. An empty cluster is reseeded with the point
 * farthest from its current centroid. If sse_trace is given, it receives
 * the SSE after every assignment step.
 */
ClusterModel lloyd(std::span<const Point> points, std::vector<Point> centroids, int max_iterations = 300,
                   std::vector<double>* sse_trace = nullptr);

/// k-means++ seeding.
std::vector<Point> kmeanspp_seeds(std::span<const Point> points, int k, CounterRng& rng);

/// Best of `restarts` k-means++ seeded Lloyd runs. InvalidConfig if
/// k < 1 or there are fewer points than k.
ClusterModel kmeans(std::span<const Point> points, int k, std::uint64_t seed = 1, int restarts = 10,
                    int max_iterations = 300);

struct SsePoint {
    int k;
    double sse;
};

std::vector<SsePoint> sse_curve(std::span<const Point> points, std::span<const int> k_values, std::uint64_t seed = 1,
                                int restarts = 10);

/// k with the largest discrete second difference sse(k-1) - 2 sse(k) + sse(k+1),
/// ties to the smaller k. Needs at least 4 consecutive k values (InvalidConfig).
int select_k_elbow(std::span<const SsePoint> curve);

enum class HistogramNormalization
{
    PerCategory, ///< each level's curve sums to 1 over months
    PerMonth,    ///< each month's four levels sum to 1
};

std::string_view to_string(HistogramNormalization n);

/**
 * Monthly distribution of post-decision levels (None, Low, Medium, High).
 * counts[level][month - 1] are raw decision counts; proportions follow the
 * normalization. A level or month without decisions stays all zero.
 */
struct DecisionHistogram {
    int months = 6;
    HistogramNormalization normalization = HistogramNormalization::PerCategory;
    std::array<std::vector<long>, 4> counts;
    std::array<std::vector<double>, 4> proportions;

    long total(int level) const;
};

/// Recomputes the proportions from the counts.
void normalize_histogram(DecisionHistogram& histogram);

DecisionHistogram decision_histogram(std::span<const SessionLog* const> sessions, RateBand band, int months = 6,
                                     HistogramNormalization normalization = HistogramNormalization::PerCategory);

/// One histogram per cluster label in 0..k-1; labels[i] belongs to sessions[i].
std::vector<DecisionHistogram> monthly_decision_histograms(std::span<const SessionLog* const> sessions,
                                                           std::span<const int> labels, int k, RateBand band,
                                                           int months = 6,
                                                           HistogramNormalization normalization =
                                                               HistogramNormalization::PerCategory);

} // namespace fieldlab

#endif // FIELDLAB_CLUSTER_H
