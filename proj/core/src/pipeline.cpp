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
#include "fieldlab/pipeline.h"
#include "fieldlab/errors.h"
#include "pipeline_detail.h"

#include <fmt/format.h>

#include <algorithm>
#include <numeric>
#include <set>

namespace fieldlab
{

std::string_view to_string(VisibilitySlice s)
{
    switch (s) {
    case VisibilitySlice::InfectionVisible:
        return "infection-visible";
    case VisibilitySlice::InfectionHidden:
        return "infection-hidden";
    case VisibilitySlice::BiosecurityVisible:
        return "biosecurity-visible";
    case VisibilitySlice::BiosecurityHidden:
        return "biosecurity-hidden";
    }
    return "?";
}

bool in_slice(VisibilitySlice s, Visibility v)
{
    switch (s) {
    case VisibilitySlice::InfectionVisible:
        return shows_infection(v);
    case VisibilitySlice::InfectionHidden:
        return !shows_infection(v);
    case VisibilitySlice::BiosecurityVisible:
        return shows_biosecurity(v);
    case VisibilitySlice::BiosecurityHidden:
        return !shows_biosecurity(v);
    }
    return false;
}

RecordFilter slice_filter(VisibilitySlice s)
{
    return [s](const DecisionRecord& r) {
        return in_slice(s, r.visibility);
    };
}

ParticipantSummary summarize_participant(const SessionLog& session)
{
    ParticipantSummary p;
    p.session_id = session.session_id;
    p.policy     = session.policy;
    p.rating     = rating_vector(session);
    if (auto all = session_rating(session)) {
        p.overall = all->value();
    }
    for (std::size_t i = 0; i < visibility_slices.size(); ++i) {
        if (auto r = session_rating(session, slice_filter(visibility_slices[i]))) {
            p.slice_rating[i] = r->value();
        }
    }
    return p;
}

namespace
{

std::vector<double> slice_values(std::span<const ParticipantSummary> participants, VisibilitySlice s)
{
    const auto index = static_cast<std::size_t>(s);
    std::vector<double> v;
    for (const auto& p : participants) {
        if (p.slice_rating[index]) {
            v.push_back(*p.slice_rating[index]);
        }
    }
    return v;
}

TestResult slice_test(std::span<const ParticipantSummary> participants, VisibilitySlice a, VisibilitySlice b,
                      Alternative alternative)
{
    const auto va = slice_values(participants, a);
    const auto vb = slice_values(participants, b);
    if (va.empty() || vb.empty()) {
        throw InsufficientSample(fmt::format("no ratings in the {} or {} rounds", to_string(a), to_string(b)));
    }
    return mann_whitney_u(va, vb, alternative);
}

} // namespace

TestResult infection_visibility_test(std::span<const ParticipantSummary> participants)
{
    return slice_test(participants, VisibilitySlice::InfectionVisible, VisibilitySlice::InfectionHidden,
                      Alternative::Greater);
}

TestResult biosecurity_visibility_test(std::span<const ParticipantSummary> participants)
{
    return slice_test(participants, VisibilitySlice::BiosecurityVisible, VisibilitySlice::BiosecurityHidden,
                      Alternative::Less);
}

double recovery_accuracy(std::span<const std::string> truth, std::span<const int> labels)
{
    if (truth.size() != labels.size()) {
        throw_invalid_config("one class per label is required");
    }
    if (truth.empty()) {
        throw InsufficientSample("recovery accuracy of an empty assignment");
    }
    std::vector<std::string> classes(truth.begin(), truth.end());
    std::sort(classes.begin(), classes.end());
    classes.erase(std::unique(classes.begin(), classes.end()), classes.end());
    const int clusters = *std::max_element(labels.begin(), labels.end()) + 1;
    const int n_class  = static_cast<int>(classes.size());
    if (clusters > 8 || n_class > 8 || *std::min_element(labels.begin(), labels.end()) < 0) {
        throw_invalid_config("recovery accuracy supports up to 8 clusters and classes");
    }
    const int n = std::max(clusters, n_class);
    std::vector<long> confusion(static_cast<std::size_t>(n * n), 0);
    for (std::size_t i = 0; i < truth.size(); ++i) {
        const auto c = std::lower_bound(classes.begin(), classes.end(), truth[i]) - classes.begin();
        ++confusion[static_cast<std::size_t>(labels[i] * n + c)];
    }
    std::vector<int> perm(static_cast<std::size_t>(n));
    std::iota(perm.begin(), perm.end(), 0);
    long best = 0;
    do {
        long hits = 0;
        for (int i = 0; i < n; ++i) {
            hits += confusion[static_cast<std::size_t>(i * n + perm[static_cast<std::size_t>(i)])];
        }
        best = std::max(best, hits);
    } while (std::next_permutation(perm.begin(), perm.end()));
    return static_cast<double>(best) / static_cast<double>(truth.size());
}

std::string policy_class(const std::string& label)
{
    constexpr std::string_view noisy = "noisy(";
    if (label.rfind(noisy, 0) == 0) {
        const auto end = label.find(',');
        return label.substr(noisy.size(), end == std::string::npos ? std::string::npos : end - noisy.size());
    }
    return label;
}

namespace detail
{

std::string_view band_name(RateBand band)
{
    switch (band) {
    case RateBand::Low:
        return "low";
    case RateBand::High:
        return "high";
    case RateBand::Intermediate:
        return "intermediate";
    }
    return "?";
}

RateBand parse_band(std::string_view s)
{
    for (auto b : {RateBand::Low, RateBand::High, RateBand::Intermediate}) {
        if (band_name(b) == s) {
            return b;
        }
    }
    throw ParseError(fmt::format("unknown rate band '{}'", s));
}

namespace
{

double coordinate_sum(const Point& p)
{
    return p[0] + p[1];
}

} // namespace

void canonicalize(ClusterModel& model)
{
    const int k = model.k;
    std::vector<int> order(static_cast<std::size_t>(k));
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
        return coordinate_sum(model.centroids[static_cast<std::size_t>(a)]) >
               coordinate_sum(model.centroids[static_cast<std::size_t>(b)]);
    });
    if (k == 3) {
        // descending sum gives RA, O, RT
        std::swap(order[1], order[2]);
    }
    std::vector<int> new_label(static_cast<std::size_t>(k));
    std::vector<Point> centroids;
    for (int i = 0; i < k; ++i) {
        new_label[static_cast<std::size_t>(order[static_cast<std::size_t>(i)])] = i;
        centroids.push_back(model.centroids[static_cast<std::size_t>(order[static_cast<std::size_t>(i)])]);
    }
    model.centroids = std::move(centroids);
    for (int& a : model.assignments) {
        a = new_label[static_cast<std::size_t>(a)];
    }
}

std::vector<std::string> cluster_names(int k)
{
    if (k == 3) {
        return {"RA", "RT", "O"};
    }
    std::vector<std::string> names;
    for (int i = 1; i <= k; ++i) {
        names.push_back(fmt::format("C{}", i));
    }
    return names;
}

std::vector<int> risk_ranks(const std::vector<Point>& centroids)
{
    std::vector<int> order(centroids.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
        return coordinate_sum(centroids[static_cast<std::size_t>(a)]) <
               coordinate_sum(centroids[static_cast<std::size_t>(b)]);
    });
    std::vector<int> rank(centroids.size());
    for (std::size_t i = 0; i < order.size(); ++i) {
        rank[static_cast<std::size_t>(order[i])] = static_cast<int>(i);
    }
    return rank;
}

namespace
{

const SliceAssignment* find_slice(const Exp1Report& report, VisibilitySlice s)
{
    for (const auto& slice : report.slices) {
        if (slice.name == to_string(s)) {
            return &slice;
        }
    }
    return nullptr;
}

std::vector<double> label_codes(const SliceAssignment& slice, const std::vector<int>& ranks)
{
    std::vector<double> codes;
    for (int l : slice.labels) {
        if (l >= 0) {
            codes.push_back(ranks[static_cast<std::size_t>(l)]);
        }
    }
    return codes;
}

std::optional<std::vector<double>> category_distribution(const DecisionHistogram& h, int level)
{
    const auto& v = h.proportions[static_cast<std::size_t>(level)];
    const double total = std::accumulate(v.begin(), v.end(), 0.0);
    if (total <= 0.0) {
        return std::nullopt;
    }
    std::vector<double> d(v.begin(), v.end());
    for (double& x : d) {
        x /= total;
    }
    return d;
}

const DecisionHistogram* find_histogram(const Exp1Report& report, int cluster, RateBand band)
{
    for (const auto& h : report.histograms) {
        if (h.cluster == cluster && h.band == band) {
            return &h.histogram;
        }
    }
    return nullptr;
}

KlVector kl_vector(const Exp1Report& report, std::string name, RateBand band, int p, int q)
{
    KlVector kl{std::move(name), band, p, q, {}};
    const auto* hp = find_histogram(report, p, band);
    const auto* hq = find_histogram(report, q, band);
    if (!hp || !hq) {
        return kl;
    }
    for (int level = 0; level < 4; ++level) {
        const auto dp = category_distribution(*hp, level);
        const auto dq = category_distribution(*hq, level);
        if (!dp && !dq) {
            kl.values[static_cast<std::size_t>(level)] = 0.0;
        }
        else if (dp && dq) {
            kl.values[static_cast<std::size_t>(level)] = kl_divergence(*dp, *dq);
        }
    }
    return kl;
}

void add_summary(Exp1Report& report, std::string name, const std::vector<double>& values)
{
    if (!values.empty()) {
        report.summaries.push_back({std::move(name), descriptive(values)});
    }
}

} // namespace

void derive_statistics(Exp1Report& report)
{
    report.tests.clear();
    report.summaries.clear();
    report.kl.clear();
    report.recovery.reset();
    const auto& ps = report.participants;

    try {
        report.tests.push_back({"H1", infection_visibility_test(ps)});
    }
    catch (const InsufficientSample&) {
    }
    try {
        report.tests.push_back({"H2", biosecurity_visibility_test(ps)});
    }
    catch (const InsufficientSample&) {
    }
    if (report.clustered) {
        const auto ranks = risk_ranks(report.model.centroids);
        auto label_test  = [&](std::string name, VisibilitySlice a, VisibilitySlice b) {
            const auto* sa = find_slice(report, a);
            const auto* sb = find_slice(report, b);
            if (!sa || !sb) {
                return;
            }
            const auto ca = label_codes(*sa, ranks);
            const auto cb = label_codes(*sb, ranks);
            if (!ca.empty() && !cb.empty()) {
                report.tests.push_back({std::move(name), ks_two_sample(ca, cb)});
            }
        };
        label_test("H1-labels", VisibilitySlice::InfectionVisible, VisibilitySlice::InfectionHidden);
        label_test("H2-labels", VisibilitySlice::BiosecurityVisible, VisibilitySlice::BiosecurityHidden);
    }
    for (auto s : visibility_slices) {
        const auto v = slice_values(ps, s);
        try {
            report.tests.push_back({fmt::format("normality:{}", to_string(s)), dagostino_pearson(v)});
        }
        catch (const InsufficientSample&) {
        }
        catch (const DataError&) {
        }
    }

    std::vector<double> low, high, overall;
    for (const auto& p : ps) {
        if (p.rating.low) {
            low.push_back(p.rating.low->value());
        }
        if (p.rating.high) {
            high.push_back(p.rating.high->value());
        }
        if (p.overall) {
            overall.push_back(*p.overall);
        }
    }
    add_summary(report, "rating-low", low);
    add_summary(report, "rating-high", high);
    add_summary(report, "rating-overall", overall);
    for (auto s : visibility_slices) {
        add_summary(report, std::string(to_string(s)), slice_values(ps, s));
    }

    if (report.clustered && report.model.k == 3) {
        report.kl.push_back(kl_vector(report, "OP||RT", RateBand::Low, 2, 1));
        report.kl.push_back(kl_vector(report, "OP||RA", RateBand::High, 2, 0));
    }

    if (report.clustered) {
        std::vector<std::string> truth;
        std::vector<int> labels;
        bool known = true;
        for (const auto& p : ps) {
            if (p.label < 0) {
                continue;
            }
            if (p.policy.empty()) {
                known = false;
                break;
            }
            truth.push_back(policy_class(p.policy));
            labels.push_back(p.label);
        }
        if (known && !truth.empty()) {
            report.recovery = recovery_accuracy(truth, labels);
        }
    }
}

} // namespace detail

namespace
{

bool complete_design(const SessionLog& s)
{
    return s.design == ScheduleDesign::FullFactorial;
}

SliceAssignment assign_slice(std::string name, std::span<const SessionLog* const> sessions, const RecordFilter& filter,
                             const std::vector<Point>& centroids)
{
    SliceAssignment slice;
    slice.name = std::move(name);
    slice.counts.assign(centroids.size(), 0);
    for (const auto* s : sessions) {
        const auto rv = rating_vector(*s, filter);
        if (!rv.complete()) {
            slice.points.push_back({0.0, 0.0});
            slice.labels.push_back(-1);
            ++slice.excluded;
            continue;
        }
        const Point p = rv.point();
        const int l   = assign_to_centroids(std::span<const Point>(&p, 1), centroids).front();
        slice.points.push_back(p);
        slice.labels.push_back(l);
        ++slice.counts[static_cast<std::size_t>(l)];
    }
    return slice;
}

} // namespace

Exp1Report analyze_exp1(std::span<const SessionLog> sessions, const Exp1Options& options)
{
    if (sessions.empty()) {
        throw DataError("no sessions to analyze");
    }
    if (options.k < 1 || options.restarts < 1 || options.months < 1) {
        throw_invalid_config("k, restarts and months must be positive");
    }
    Exp1Report report;
    report.options = options;

    std::vector<const SessionLog*> ordered;
    for (const auto& s : sessions) {
        if (!complete_design(s)) {
            report.messages.push_back(
                fmt::format("skipped {}: {} design", s.session_id, to_string(s.design)));
            continue;
        }
        ordered.push_back(&s);
    }
    if (ordered.empty()) {
        throw DataError("no full-factorial sessions in the logs");
    }
    std::stable_sort(ordered.begin(), ordered.end(), [](const SessionLog* a, const SessionLog* b) {
        return a->session_id < b->session_id;
    });

    std::vector<const SessionLog*> kept;
    for (const auto* s : ordered) {
        try {
            report.participants.push_back(summarize_participant(*s));
            kept.push_back(s);
        }
        catch (const ContractViolation& e) {
            report.messages.push_back(fmt::format("skipped {}: {}", s->session_id, e.what()));
        }
    }

    std::vector<Point> points;
    std::vector<std::size_t> included;
    std::vector<const SessionLog*> included_sessions;
    for (std::size_t i = 0; i < report.participants.size(); ++i) {
        const auto& rv = report.participants[i].rating;
        if (!rv.complete()) {
            ++report.excluded;
            report.messages.push_back(fmt::format("excluded {} from clustering: no decisions at the {} rate",
                                                  report.participants[i].session_id, rv.low ? "high" : "low"));
            continue;
        }
        points.push_back(rv.point());
        included.push_back(i);
        included_sessions.push_back(kept[i]);
    }

    if (report.participants.size() < 2) {
        report.messages.push_back("clustering skipped: single session");
    }
    else if (points.size() < static_cast<std::size_t>(options.k)) {
        report.messages.push_back(fmt::format("clustering skipped: {} complete rating vectors for k = {}",
                                              points.size(), options.k));
    }
    else {
        if (options.k_max >= 4 && points.size() >= static_cast<std::size_t>(options.k_max)) {
            std::vector<int> ks(static_cast<std::size_t>(options.k_max));
            std::iota(ks.begin(), ks.end(), 1);
            report.elbow   = sse_curve(points, ks, options.seed, options.restarts);
            report.elbow_k = select_k_elbow(report.elbow);
            if (*report.elbow_k != options.k) {
                report.messages.push_back(
                    fmt::format("elbow selects k = {}; the model uses k = {}", *report.elbow_k, options.k));
            }
        }
        else {
            report.messages.push_back("elbow curve skipped: too few complete rating vectors");
        }
        report.model = kmeans(points, options.k, options.seed, options.restarts);
        detail::canonicalize(report.model);
        report.cluster_names = detail::cluster_names(options.k);
        report.clustered     = true;
        for (std::size_t j = 0; j < included.size(); ++j) {
            report.participants[included[j]].label = report.model.assignments[j];
        }

        for (auto s : visibility_slices) {
            report.slices.push_back(
                assign_slice(std::string(to_string(s)), kept, slice_filter(s), report.model.centroids));
        }
        for (auto v : {Visibility::Full, Visibility::InfectionHidden, Visibility::BiosecurityHidden,
                       Visibility::BothHidden}) {
            report.slices.push_back(assign_slice(
                fmt::format("treatment:{}", to_string(v)), kept,
                [v](const DecisionRecord& r) {
                    return r.visibility == v;
                },
                report.model.centroids));
        }

        for (auto band : {RateBand::Low, RateBand::High}) {
            const auto hs = monthly_decision_histograms(included_sessions, report.model.assignments, options.k, band,
                                                        options.months, options.normalization);
            for (std::size_t c = 0; c < hs.size(); ++c) {
                report.histograms.push_back({static_cast<int>(c), band, hs[c]});
            }
        }
    }

    detail::derive_statistics(report);
    return report;
}

std::vector<double> CohortRatings::values() const
{
    std::vector<double> v;
    v.reserve(ratings.size());
    for (const auto& r : ratings) {
        v.push_back(r.value());
    }
    return v;
}

namespace
{

CohortRatings cohort_ratings(std::span<const SessionLog> sessions, std::string name)
{
    if (sessions.empty()) {
        throw DataError(fmt::format("cohort {} has no sessions", name));
    }
    std::vector<const SessionLog*> ordered;
    for (const auto& s : sessions) {
        if (s.design != ScheduleDesign::ConstantRate) {
            throw DataError(fmt::format("design mismatch: session {} of cohort {} is {}, comparison needs {}",
                                        s.session_id, name, to_string(s.design),
                                        to_string(ScheduleDesign::ConstantRate)));
        }
        ordered.push_back(&s);
    }
    std::stable_sort(ordered.begin(), ordered.end(), [](const SessionLog* a, const SessionLog* b) {
        return a->session_id < b->session_id;
    });
    CohortRatings c;
    c.name = std::move(name);
    for (const auto* s : ordered) {
        auto r = session_rating(*s);
        if (!r) {
            throw DataError(fmt::format("session {} has no decisions", s->session_id));
        }
        c.session_ids.push_back(s->session_id);
        c.policies.push_back(s->policy);
        c.ratings.push_back(*r);
    }
    return c;
}

} // namespace

ComparisonReport compare_cohorts(std::span<const SessionLog> a, std::span<const SessionLog> b, std::string name_a,
                                 std::string name_b)
{
    ComparisonReport report;
    report.a         = cohort_ratings(a, std::move(name_a));
    report.b         = cohort_ratings(b, std::move(name_b));
    const auto va    = report.a.values();
    const auto vb    = report.b.values();
    report.summary_a = {report.a.name, descriptive(va)};
    report.summary_b = {report.b.name, descriptive(vb)};
    report.ks        = ks_two_sample(va, vb);
    report.mwu       = mann_whitney_u(va, vb, Alternative::TwoSided);
    return report;
}

namespace
{

std::string format_p(double p)
{
    if (p < 0.001) {
        return "p < 0.001";
    }
    if (p < 0.01) {
        return fmt::format("p = {:.3f}", p);
    }
    return fmt::format("p = {:.2f}", p);
}

std::string format_sizes(const TestResult& r)
{
    if (r.n1 == r.n2) {
        return fmt::format("n1 = n2 = {}", r.n1);
    }
    return fmt::format("n1 = {}, n2 = {}", r.n1, r.n2);
}

} // namespace

std::string format_ks_tuple(const TestResult& r)
{
    return fmt::format("(D = {:.2f}, {}, {})", r.statistic, format_p(r.p_value), format_sizes(r));
}

std::string format_mwu_tuple(const TestResult& r)
{
    return fmt::format("(Mann-Whitney U = {:.1f}, {}, {}, {})", r.statistic, format_sizes(r), format_p(r.p_value),
                       r.tails() == Tails::One ? "one-tailed" : "two-tailed");
}

bool VerifyReport::ok() const
{
    return !checks.empty() && std::all_of(checks.begin(), checks.end(), [](const VerifyCheck& c) {
        return c.ok;
    });
}

} // namespace fieldlab
