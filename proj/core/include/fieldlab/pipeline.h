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
#ifndef FIELDLAB_PIPELINE_H
#define FIELDLAB_PIPELINE_H

#include "fieldlab/cluster.h"
#include "fieldlab/metrics.h"
#include "fieldlab/session_log.h"
#include "fieldlab/stats.h"

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace fieldlab
{

/// Rounds grouped by what one kind of neighbour information showed.
enum class VisibilitySlice
{
    InfectionVisible,   ///< Full, BiosecurityHidden
    InfectionHidden,    ///< InfectionHidden, BothHidden
    BiosecurityVisible, ///< Full, InfectionHidden
    BiosecurityHidden,  ///< BiosecurityHidden, BothHidden
};

inline constexpr std::array<VisibilitySlice, 4> visibility_slices = {
    VisibilitySlice::InfectionVisible, VisibilitySlice::InfectionHidden, VisibilitySlice::BiosecurityVisible,
    VisibilitySlice::BiosecurityHidden};

std::string_view to_string(VisibilitySlice s);
bool in_slice(VisibilitySlice s, Visibility v);
RecordFilter slice_filter(VisibilitySlice s);

/// Per-participant ratings used by the Exp. 1 analysis.
struct ParticipantSummary {
    std::string session_id;
    std::string policy;
    RatingVector rating;
    std::optional<double> overall;
    /// Aggregate rating over each visibility slice, indexed like visibility_slices.
    std::array<std::optional<double>, 4> slice_rating;
    /// Cluster of the full rating vector; -1 when excluded or not clustered.
    int label = -1;
};

ParticipantSummary summarize_participant(const SessionLog& session);

/// Infection-visible aggregate ratings greater than infection-hidden ones (one-tailed).
TestResult infection_visibility_test(std::span<const ParticipantSummary> participants);
/// Biosecurity-visible aggregate ratings less than biosecurity-hidden ones (one-tailed).
TestResult biosecurity_visibility_test(std::span<const ParticipantSummary> participants);

/**
 * Share of participants whose cluster matches their true class under the
 * best one-to-one matching of clusters to classes. Classes are arbitrary
 * strings; the number of distinct classes and clusters may not exceed 8.
 */
double recovery_accuracy(std::span<const std::string> truth, std::span<const int> labels);

/// Policy kind named by a synthetic session's policy label, e.g.
/// "noisy(opportunistic,0.05)" -> "opportunistic".
std::string policy_class(const std::string& policy_label);

struct Exp1Options {
    std::uint64_t seed = 1;
    int restarts       = 10;
    int k              = 3;
    int k_max          = 8;
    int months         = 6;
    HistogramNormalization normalization = HistogramNormalization::PerCategory;
};

/// Fixed-centroid labels of one subset of rounds.
struct SliceAssignment {
    std::string name;
    std::vector<Point> points;  ///< per participant; meaningless where label is -1
    std::vector<int> labels;    ///< per participant, -1 when the subset lacks a rate
    std::vector<long> counts;   ///< per cluster
    long excluded = 0;
};

struct NamedTest {
    std::string name;
    TestResult result;
};

struct NamedSummary {
    std::string name;
    Descriptive value;
};

struct ClusterHistogram {
    int cluster;
    RateBand band;
    DecisionHistogram histogram;
};

/// Per-category divergence between two clusters' monthly histograms.
/// A category without decisions in both is 0, in only one is undefined.
struct KlVector {
    std::string name;
    RateBand band;
    int p_cluster;
    int q_cluster;
    std::array<std::optional<double>, 4> values;
};

struct Exp1Report {
    Exp1Options options;
    std::vector<ParticipantSummary> participants;
    std::vector<std::string> messages;
    long excluded  = 0;
    bool clustered = false;
    std::vector<SsePoint> elbow;
    std::optional<int> elbow_k;
    /// Centroids in canonical order (RA, RT, O for k = 3); assignments over included participants.
    ClusterModel model;
    std::vector<std::string> cluster_names;
    std::vector<SliceAssignment> slices;
    std::vector<NamedTest> tests;
    std::vector<NamedSummary> summaries;
    std::vector<ClusterHistogram> histograms;
    std::vector<KlVector> kl;
    std::optional<double> recovery;
};

/**
 * Exp. 1 analysis of FullFactorial sessions: rating vectors, elbow curve,
 * k-means model, per-slice reassignment, H1/H2 tests, label KS tests,
 * normality checks and monthly histograms with KL vectors.
 * DataError when there is no session or no FullFactorial session.
 */
Exp1Report analyze_exp1(std::span<const SessionLog> sessions, const Exp1Options& options = {});

/// Writes the machine-readable tables, manifest.json and summary.txt.
void write_exp1_bundle(const Exp1Report& report, const std::filesystem::path& dir);
std::string render_exp1_summary(const Exp1Report& report);

struct CohortRatings {
    std::string name;
    std::vector<std::string> session_ids;
    std::vector<std::string> policies;
    std::vector<AdoptionRating> ratings;

    std::vector<double> values() const;
};

struct ComparisonReport {
    CohortRatings a;
    CohortRatings b;
    NamedSummary summary_a;
    NamedSummary summary_b;
    TestResult ks;
    TestResult mwu;
};

/// Two-sided KS and Mann-Whitney on per-participant ratings of two
/// ConstantRate cohorts. DataError on an empty cohort or another design.
ComparisonReport compare_cohorts(std::span<const SessionLog> a, std::span<const SessionLog> b,
                                 std::string name_a = "a", std::string name_b = "b");

void write_comparison_bundle(const ComparisonReport& report, const std::filesystem::path& dir);
std::string render_comparison_summary(const ComparisonReport& report);

/// "(D = 0.16, p = 0.51, n1 = n2 = 50)"
std::string format_ks_tuple(const TestResult& r);
/// "(Mann-Whitney U = 541840.5, n1 = n2 = 1000, p < 0.001, one-tailed)"
std::string format_mwu_tuple(const TestResult& r);

struct VerifyCheck {
    std::string name;
    bool ok;
    std::string detail;
};

struct VerifyReport {
    std::string kind;
    std::vector<VerifyCheck> checks;

    bool ok() const;
};

/// Recomputes every reported statistic of a bundle from its tables.
/// DataError when the directory is not a readable bundle.
VerifyReport verify_bundle(const std::filesystem::path& dir);

} // namespace fieldlab

#endif // FIELDLAB_PIPELINE_H
