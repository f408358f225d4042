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
#include "fieldlab/pipeline.h"
#include "fieldlab/text_config.h"
#include "pipeline_detail.h"

#include <fmt/format.h>
#include <json.hpp>

#include <cmath>
#include <fstream>
#include <map>
#include <sstream>

namespace fieldlab
{

namespace detail
{

std::string number(double v)
{
    return fmt::format("{}", v);
}

std::string csv_row(const std::vector<std::string>& fields)
{
    std::string line;
    for (std::size_t i = 0; i < fields.size(); ++i) {
        if (i > 0) {
            line += ',';
        }
        const auto& f = fields[i];
        if (f.find_first_of(",\"\n") == std::string::npos) {
            line += f;
            continue;
        }
        line += '"';
        for (char c : f) {
            if (c == '"') {
                line += '"';
            }
            line += c;
        }
        line += '"';
    }
    line += '\n';
    return line;
}

namespace
{

std::vector<std::string> split_csv_line(const std::string& line)
{
    std::vector<std::string> fields(1);
    bool quoted = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
        const char c = line[i];
        if (quoted) {
            if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
                fields.back() += '"';
                ++i;
            }
            else if (c == '"') {
                quoted = false;
            }
            else {
                fields.back() += c;
            }
        }
        else if (c == '"') {
            quoted = true;
        }
        else if (c == ',') {
            fields.emplace_back();
        }
        else {
            fields.back() += c;
        }
    }
    if (quoted) {
        throw ParseError("unterminated quote in CSV line");
    }
    return fields;
}

} // namespace

std::vector<std::vector<std::string>> read_csv(const std::filesystem::path& path,
                                               const std::vector<std::string>& header)
{
    std::ifstream in(path);
    if (!in) {
        throw DataError(fmt::format("cannot read {}", path.string()));
    }
    std::string line;
    if (!std::getline(in, line) || split_csv_line(line) != header) {
        throw DataError(fmt::format("{}: unexpected header", path.string()));
    }
    std::vector<std::vector<std::string>> rows;
    while (std::getline(in, line)) {
        if (line.empty()) {
            continue;
        }
        auto row = split_csv_line(line);
        if (row.size() != header.size()) {
            throw DataError(fmt::format("{}: row with {} fields, expected {}", path.string(), row.size(),
                                        header.size()));
        }
        rows.push_back(std::move(row));
    }
    return rows;
}

} // namespace detail

namespace
{

using detail::csv_row;
using detail::number;
using nlohmann::ordered_json;

constexpr std::string_view bundle_schema = "fieldlab.report-bundle";

const std::vector<std::string> participants_header = {
    "session_id",         "policy",           "low_level_sum",       "low_decisions",     "high_level_sum",
    "high_decisions",     "r_low",            "r_high",              "overall",           "infection_visible",
    "infection_hidden",   "biosecurity_visible", "biosecurity_hidden", "label"};
const std::vector<std::string> elbow_header     = {"k", "sse"};
const std::vector<std::string> centroids_header = {"cluster", "name", "x", "y", "size"};
const std::vector<std::string> slices_header    = {"slice", "session_id", "r_low", "r_high", "label"};
const std::vector<std::string> counts_header    = {"slice", "name", "count"};
const std::vector<std::string> tests_header     = {"name", "method", "alternative", "statistic", "p_value", "n1", "n2"};
const std::vector<std::string> summaries_header = {"name", "n", "mean", "median", "sd", "min", "max"};
const std::vector<std::string> histograms_header = {"cluster", "name", "band", "level", "month", "count",
                                                    "proportion"};
const std::vector<std::string> kl_header        = {"name", "band", "p", "q", "level", "value"};
const std::vector<std::string> cohort_header    = {"session_id", "policy", "level_sum", "decisions", "rating"};

std::string opt_number(const std::optional<double>& v)
{
    return v ? number(*v) : std::string();
}

std::optional<double> parse_opt(const std::string& s, const std::string& what)
{
    if (s.empty()) {
        return std::nullopt;
    }
    return parse_double(s, what);
}

void write_text(const std::filesystem::path& path, const std::string& text)
{
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) {
        throw DataError(fmt::format("cannot write {}", path.string()));
    }
    out << text;
    if (!out) {
        throw DataError(fmt::format("write failed: {}", path.string()));
    }
}

std::string read_text(const std::filesystem::path& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw DataError(fmt::format("cannot read {}", path.string()));
    }
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

std::string tests_table(const std::vector<NamedTest>& tests)
{
    std::string out = csv_row(tests_header);
    for (const auto& t : tests) {
        out += csv_row({t.name, t.result.method, std::string(to_string(t.result.alternative)),
                        number(t.result.statistic), number(t.result.p_value), std::to_string(t.result.n1),
                        std::to_string(t.result.n2)});
    }
    return out;
}

std::string summaries_table(const std::vector<NamedSummary>& summaries)
{
    std::string out = csv_row(summaries_header);
    for (const auto& s : summaries) {
        const auto& d = s.value;
        out += csv_row({s.name, std::to_string(d.n), number(d.mean), number(d.median), number(d.sd), number(d.min),
                        number(d.max)});
    }
    return out;
}

std::string format_test(const NamedTest& t)
{
    const auto& r = t.result;
    if (r.method.rfind("mann-whitney", 0) == 0) {
        return format_mwu_tuple(r);
    }
    if (r.method.rfind("ks", 0) == 0) {
        return format_ks_tuple(r);
    }
    return fmt::format("(K2 = {:.2f}, p = {:.3f}, n = {})", r.statistic, r.p_value, r.n1);
}

std::string format_kl_value(const std::optional<double>& v)
{
    if (!v) {
        return "undefined";
    }
    return *v == 0.0 ? std::string("0") : fmt::format("{:.4f}", *v);
}

constexpr std::array<std::string_view, 4> level_names = {"None", "Low", "Medium", "High"};

} // namespace

std::string render_exp1_summary(const Exp1Report& r)
{
    std::string s = "fieldlab full-factorial analysis\n";
    s += fmt::format("participants: {} ({} excluded from clustering)\n", r.participants.size(), r.excluded);
    for (const auto& m : r.messages) {
        s += fmt::format("note: {}\n", m);
    }
    if (r.elbow_k) {
        s += fmt::format("elbow: k = {} over k = {}..{}\n", *r.elbow_k, r.elbow.front().k, r.elbow.back().k);
    }
    if (r.clustered) {
        s += fmt::format("model: k = {}, sse = {:.4f}\n", r.model.k, r.model.sse);
        for (int c = 0; c < r.model.k; ++c) {
            const auto& p = r.model.centroids[static_cast<std::size_t>(c)];
            const auto n  = std::count(r.model.assignments.begin(), r.model.assignments.end(), c);
            s += fmt::format("  {} ({:.2f}, {:.2f}) n = {}\n", r.cluster_names[static_cast<std::size_t>(c)], p[0],
                             p[1], n);
        }
        if (r.recovery) {
            s += fmt::format("recovery accuracy: {:.4f}\n", *r.recovery);
        }
        s += "slice counts:\n";
        for (const auto& sl : r.slices) {
            std::string triple;
            for (std::size_t c = 0; c < sl.counts.size(); ++c) {
                triple += fmt::format("{}{} {}", c ? ", " : "", sl.counts[c], r.cluster_names[c]);
            }
            s += fmt::format("  {} ({}), {} excluded\n", sl.name, triple, sl.excluded);
        }
    }
    if (!r.tests.empty()) {
        s += "tests:\n";
        for (const auto& t : r.tests) {
            s += fmt::format("  {} {}\n", t.name, format_test(t));
        }
    }
    if (!r.summaries.empty()) {
        s += "summaries:\n";
        for (const auto& d : r.summaries) {
            s += fmt::format("  {} {} n = {}\n", d.name, format_summary(d.value), d.value.n);
        }
    }
    if (!r.kl.empty()) {
        s += fmt::format("KL divergence per level ({} histograms, natural log):\n",
                         to_string(r.options.normalization));
        for (const auto& kl : r.kl) {
            std::string values;
            for (std::size_t l = 0; l < 4; ++l) {
                values += fmt::format("{}{} {}", l ? ", " : "", level_names[l], format_kl_value(kl.values[l]));
            }
            s += fmt::format("  {} {} rate: {}\n", kl.name, detail::band_name(kl.band), values);
        }
    }
    return s;
}

void write_exp1_bundle(const Exp1Report& r, const std::filesystem::path& dir)
{
    std::filesystem::create_directories(dir);

    std::string participants = csv_row(participants_header);
    for (const auto& p : r.participants) {
        std::vector<std::string> row = {p.session_id, p.policy};
        for (const auto& part : {p.rating.low, p.rating.high}) {
            row.push_back(part ? std::to_string(part->level_sum) : "");
            row.push_back(part ? std::to_string(part->decisions) : "0");
        }
        row.push_back(p.rating.low ? number(p.rating.low->value()) : "");
        row.push_back(p.rating.high ? number(p.rating.high->value()) : "");
        row.push_back(opt_number(p.overall));
        for (const auto& v : p.slice_rating) {
            row.push_back(opt_number(v));
        }
        row.push_back(p.label >= 0 ? std::to_string(p.label) : "");
        participants += csv_row(row);
    }
    write_text(dir / "participants.csv", participants);

    std::string elbow = csv_row(elbow_header);
    for (const auto& e : r.elbow) {
        elbow += csv_row({std::to_string(e.k), number(e.sse)});
    }
    write_text(dir / "elbow.csv", elbow);

    std::string centroids = csv_row(centroids_header);
    std::string slices    = csv_row(slices_header);
    std::string counts    = csv_row(counts_header);
    std::string hist      = csv_row(histograms_header);
    if (r.clustered) {
        for (int c = 0; c < r.model.k; ++c) {
            const auto& p = r.model.centroids[static_cast<std::size_t>(c)];
            centroids += csv_row({std::to_string(c), r.cluster_names[static_cast<std::size_t>(c)], number(p[0]),
                                  number(p[1]),
                                  std::to_string(std::count(r.model.assignments.begin(), r.model.assignments.end(), c))});
        }
        for (const auto& sl : r.slices) {
            for (std::size_t i = 0; i < sl.labels.size(); ++i) {
                const bool in = sl.labels[i] >= 0;
                slices += csv_row({sl.name, r.participants[i].session_id, in ? number(sl.points[i][0]) : "",
                                   in ? number(sl.points[i][1]) : "", in ? std::to_string(sl.labels[i]) : ""});
            }
            for (std::size_t c = 0; c < sl.counts.size(); ++c) {
                counts += csv_row({sl.name, r.cluster_names[c], std::to_string(sl.counts[c])});
            }
            counts += csv_row({sl.name, "excluded", std::to_string(sl.excluded)});
        }
        for (const auto& h : r.histograms) {
            for (int level = 0; level < 4; ++level) {
                for (int m = 0; m < h.histogram.months; ++m) {
                    const auto l = static_cast<std::size_t>(level);
                    const auto mi = static_cast<std::size_t>(m);
                    hist += csv_row({std::to_string(h.cluster), r.cluster_names[static_cast<std::size_t>(h.cluster)],
                                     std::string(detail::band_name(h.band)), std::to_string(level),
                                     std::to_string(m + 1), std::to_string(h.histogram.counts[l][mi]),
                                     number(h.histogram.proportions[l][mi])});
                }
            }
        }
    }
    write_text(dir / "centroids.csv", centroids);
    write_text(dir / "slices.csv", slices);
    write_text(dir / "slice_counts.csv", counts);
    write_text(dir / "histograms.csv", hist);
    write_text(dir / "tests.csv", tests_table(r.tests));
    write_text(dir / "summaries.csv", summaries_table(r.summaries));

    std::string kl = csv_row(kl_header);
    for (const auto& v : r.kl) {
        for (std::size_t l = 0; l < 4; ++l) {
            kl += csv_row({v.name, std::string(detail::band_name(v.band)), std::to_string(v.p_cluster),
                           std::to_string(v.q_cluster), std::to_string(l), opt_number(v.values[l])});
        }
    }
    write_text(dir / "kl.csv", kl);

    const auto summary = render_exp1_summary(r);
    write_text(dir / "summary.txt", summary);

    ordered_json m;
    m["schema"]  = bundle_schema;
    m["version"] = 1;
    m["kind"]    = "exp1";
    m["options"] = {{"seed", r.options.seed},
                    {"restarts", r.options.restarts},
                    {"k", r.options.k},
                    {"k_max", r.options.k_max},
                    {"months", r.options.months},
                    {"normalization", to_string(r.options.normalization)}};
    m["kl"]        = {{"log", "natural"}, {"epsilon", 1e-9}};
    m["clustered"] = r.clustered;
    m["elbow_k"]   = r.elbow_k ? ordered_json(*r.elbow_k) : ordered_json(nullptr);
    m["model_sse"] = r.clustered ? ordered_json(r.model.sse) : ordered_json(nullptr);
    m["excluded"]  = r.excluded;
    m["messages"]  = r.messages;
    m["files"]     = {"participants.csv", "elbow.csv",      "centroids.csv", "slices.csv",
                      "slice_counts.csv", "histograms.csv", "tests.csv",     "summaries.csv",
                      "kl.csv",           "summary.txt"};
    write_text(dir / "manifest.json", m.dump(2) + "\n");
}

std::string render_comparison_summary(const ComparisonReport& r)
{
    std::string s = "fieldlab cohort comparison\n";
    for (const auto* d : {&r.summary_a, &r.summary_b}) {
        s += fmt::format("  {} {} n = {}\n", d->name, format_summary(d->value), d->value.n);
    }
    s += fmt::format("KS two-tailed {}\n", format_ks_tuple(r.ks));
    s += fmt::format("Mann-Whitney {}\n", format_mwu_tuple(r.mwu));
    return s;
}

namespace
{

std::string cohort_table(const CohortRatings& c)
{
    std::string out = csv_row(cohort_header);
    for (std::size_t i = 0; i < c.ratings.size(); ++i) {
        out += csv_row({c.session_ids[i], c.policies[i], std::to_string(c.ratings[i].level_sum),
                        std::to_string(c.ratings[i].decisions), number(c.ratings[i].value())});
    }
    return out;
}

} // namespace

void write_comparison_bundle(const ComparisonReport& r, const std::filesystem::path& dir)
{
    std::filesystem::create_directories(dir);
    write_text(dir / "cohort_a.csv", cohort_table(r.a));
    write_text(dir / "cohort_b.csv", cohort_table(r.b));
    write_text(dir / "tests.csv", tests_table({{"ks", r.ks}, {"mann-whitney", r.mwu}}));
    write_text(dir / "summaries.csv", summaries_table({r.summary_a, r.summary_b}));
    write_text(dir / "summary.txt", render_comparison_summary(r));
    ordered_json m;
    m["schema"]  = bundle_schema;
    m["version"] = 1;
    m["kind"]    = "compare";
    m["cohorts"] = {r.a.name, r.b.name};
    m["files"]   = {"cohort_a.csv", "cohort_b.csv", "tests.csv", "summaries.csv", "summary.txt"};
    write_text(dir / "manifest.json", m.dump(2) + "\n");
}

namespace
{

class Checker
{
public:
    explicit Checker(VerifyReport& report)
        : m_report(report)
    {
    }

    void check(std::string name, bool ok, std::string detail = {})
    {
        m_report.checks.push_back({std::move(name), ok, ok ? std::string() : std::move(detail)});
    }

    void close(std::string name, double reported, double recomputed, double tol = 1e-12)
    {
        const bool ok = std::abs(reported - recomputed) <= tol * std::max(1.0, std::abs(recomputed));
        check(std::move(name), ok, fmt::format("reported {}, recomputed {}", number(reported), number(recomputed)));
    }

private:
    VerifyReport& m_report;
};

double field(const std::string& s, const std::string& what)
{
    return parse_double(s, what);
}

std::size_t count_field(const std::string& s, const std::string& what)
{
    return static_cast<std::size_t>(parse_unsigned(s, what));
}

void check_tests(Checker& c, const std::filesystem::path& dir, const std::vector<NamedTest>& recomputed)
{
    const auto rows = detail::read_csv(dir / "tests.csv", tests_header);
    c.check("tests: count", rows.size() == recomputed.size(),
            fmt::format("{} reported, {} recomputed", rows.size(), recomputed.size()));
    for (std::size_t i = 0; i < std::min(rows.size(), recomputed.size()); ++i) {
        const auto& row = rows[i];
        const auto& t   = recomputed[i];
        c.check(fmt::format("tests: {} identity", row[0]),
                row[0] == t.name && row[1] == t.result.method && row[2] == to_string(t.result.alternative) &&
                    count_field(row[5], "n1") == t.result.n1 && count_field(row[6], "n2") == t.result.n2,
                fmt::format("reported {} {}, recomputed {} {}", row[0], row[1], t.name, t.result.method));
        c.close(fmt::format("tests: {} statistic", row[0]), field(row[3], "statistic"), t.result.statistic);
        c.close(fmt::format("tests: {} p-value", row[0]), field(row[4], "p_value"), t.result.p_value);
    }
}

void check_summaries(Checker& c, const std::filesystem::path& dir, const std::vector<NamedSummary>& recomputed)
{
    const auto rows = detail::read_csv(dir / "summaries.csv", summaries_header);
    c.check("summaries: count", rows.size() == recomputed.size(),
            fmt::format("{} reported, {} recomputed", rows.size(), recomputed.size()));
    for (std::size_t i = 0; i < std::min(rows.size(), recomputed.size()); ++i) {
        const auto& row = rows[i];
        const auto& d   = recomputed[i].value;
        c.check(fmt::format("summaries: {} identity", row[0]),
                row[0] == recomputed[i].name && count_field(row[1], "n") == d.n);
        c.close(fmt::format("summaries: {} mean", row[0]), field(row[2], "mean"), d.mean);
        c.close(fmt::format("summaries: {} median", row[0]), field(row[3], "median"), d.median);
        c.close(fmt::format("summaries: {} sd", row[0]), field(row[4], "sd"), d.sd);
        c.close(fmt::format("summaries: {} min", row[0]), field(row[5], "min"), d.min);
        c.close(fmt::format("summaries: {} max", row[0]), field(row[6], "max"), d.max);
    }
}

void check_summary_text(Checker& c, const std::filesystem::path& dir, const std::string& rendered)
{
    c.check("summary.txt reproduces", read_text(dir / "summary.txt") == rendered,
            "summary.txt differs from the summary rendered from the tables");
}

void verify_exp1(const std::filesystem::path& dir, const ordered_json& m, VerifyReport& out)
{
    Checker c(out);
    Exp1Report r;
    const auto& o       = m.at("options");
    r.options.seed      = o.at("seed").get<std::uint64_t>();
    r.options.restarts  = o.at("restarts").get<int>();
    r.options.k         = o.at("k").get<int>();
    r.options.k_max     = o.at("k_max").get<int>();
    r.options.months    = o.at("months").get<int>();
    r.options.normalization = o.at("normalization").get<std::string>() == "per-month"
                                  ? HistogramNormalization::PerMonth
                                  : HistogramNormalization::PerCategory;
    r.clustered = m.at("clustered").get<bool>();
    r.excluded  = m.at("excluded").get<long>();
    r.messages  = m.at("messages").get<std::vector<std::string>>();

    std::vector<Point> points;
    std::vector<int> file_labels;
    bool ratings_ok = true;
    long incomplete = 0;
    for (const auto& row : detail::read_csv(dir / "participants.csv", participants_header)) {
        ParticipantSummary p;
        p.session_id = row[0];
        p.policy     = row[1];
        auto part    = [&](std::size_t sum_col, std::size_t value_col) -> std::optional<AdoptionRating> {
            const auto decisions = parse_integer(row[sum_col + 1], "decisions");
            if (decisions == 0) {
                ratings_ok = ratings_ok && row[value_col].empty();
                return std::nullopt;
            }
            AdoptionRating a{static_cast<long>(parse_integer(row[sum_col], "level_sum")),
                             static_cast<int>(decisions)};
            ratings_ok = ratings_ok && !row[value_col].empty() && field(row[value_col], "rating") == a.value();
            return a;
        };
        p.rating.low  = part(2, 6);
        p.rating.high = part(4, 7);
        p.overall     = parse_opt(row[8], "overall");
        for (std::size_t i = 0; i < 4; ++i) {
            p.slice_rating[i] = parse_opt(row[9 + i], "slice rating");
        }
        p.label = row[13].empty() ? -1 : static_cast<int>(parse_integer(row[13], "label"));
        if (p.rating.complete()) {
            points.push_back(p.rating.point());
            file_labels.push_back(p.label);
        }
        else {
            ++incomplete;
            ratings_ok = ratings_ok && p.label == -1;
        }
        r.participants.push_back(std::move(p));
    }
    c.check("participants: ratings match level sums", ratings_ok);
    c.check("participants: exclusion count", incomplete == r.excluded,
            fmt::format("manifest {}, recomputed {}", r.excluded, incomplete));

    for (const auto& row : detail::read_csv(dir / "elbow.csv", elbow_header)) {
        r.elbow.push_back({static_cast<int>(parse_integer(row[0], "k")), field(row[1], "sse")});
    }
    if (!r.elbow.empty()) {
        std::vector<int> ks;
        for (const auto& e : r.elbow) {
            ks.push_back(e.k);
        }
        const auto curve = sse_curve(points, ks, r.options.seed, r.options.restarts);
        for (std::size_t i = 0; i < curve.size(); ++i) {
            c.close(fmt::format("elbow: sse at k = {}", curve[i].k), r.elbow[i].sse, curve[i].sse, 1e-9);
        }
        r.elbow_k = select_k_elbow(r.elbow);
        c.check("elbow: selected k", !m.at("elbow_k").is_null() && m.at("elbow_k").get<int>() == *r.elbow_k,
                fmt::format("manifest {}, recomputed {}", m.at("elbow_k").dump(), *r.elbow_k));
    }

    if (r.clustered) {
        for (const auto& row : detail::read_csv(dir / "centroids.csv", centroids_header)) {
            r.model.centroids.push_back({field(row[2], "x"), field(row[3], "y")});
            r.cluster_names.push_back(row[1]);
        }
        r.model.k           = static_cast<int>(r.model.centroids.size());
        r.model.assignments = file_labels;
        r.model.sse         = m.at("model_sse").get<double>();

        auto fresh = kmeans(points, r.options.k, r.options.seed, r.options.restarts);
        detail::canonicalize(fresh);
        bool centroids_ok = fresh.k == r.model.k;
        for (std::size_t i = 0; centroids_ok && i < fresh.centroids.size(); ++i) {
            for (std::size_t d = 0; d < 2; ++d) {
                centroids_ok = centroids_ok && std::abs(fresh.centroids[i][d] - r.model.centroids[i][d]) <= 1e-12;
            }
        }
        c.check("model: centroids reproduce", centroids_ok);
        c.check("model: labels reproduce", fresh.assignments == file_labels);
        c.check("model: labels are nearest centroids", assign_to_centroids(points, r.model.centroids) == file_labels);
        c.close("model: sse", r.model.sse, compute_sse(points, r.model.centroids, file_labels), 1e-9);

        std::map<std::string, std::size_t> slice_index;
        bool slices_ok = true;
        for (const auto& row : detail::read_csv(dir / "slices.csv", slices_header)) {
            auto [it, fresh_slice] = slice_index.try_emplace(row[0], r.slices.size());
            if (fresh_slice) {
                SliceAssignment s;
                s.name = row[0];
                s.counts.assign(static_cast<std::size_t>(r.model.k), 0);
                r.slices.push_back(std::move(s));
            }
            auto& s = r.slices[it->second];
            slices_ok = slices_ok && s.labels.size() < r.participants.size() &&
                        r.participants[s.labels.size()].session_id == row[1];
            if (row[4].empty()) {
                s.points.push_back({0.0, 0.0});
                s.labels.push_back(-1);
                ++s.excluded;
                continue;
            }
            const Point p{field(row[2], "r_low"), field(row[3], "r_high")};
            const int label = static_cast<int>(parse_integer(row[4], "label"));
            const int nearest = assign_to_centroids(std::span<const Point>(&p, 1), r.model.centroids).front();
            slices_ok = slices_ok && nearest == label;
            s.points.push_back(p);
            s.labels.push_back(label);
            ++s.counts.at(static_cast<std::size_t>(label));
        }
        c.check("slices: labels are nearest centroids", slices_ok);
        bool counts_ok = true;
        for (const auto& row : detail::read_csv(dir / "slice_counts.csv", counts_header)) {
            const auto it = slice_index.find(row[0]);
            if (it == slice_index.end()) {
                counts_ok = false;
                continue;
            }
            const auto& s    = r.slices[it->second];
            const long value = static_cast<long>(parse_integer(row[2], "count"));
            if (row[1] == "excluded") {
                counts_ok = counts_ok && value == s.excluded;
                continue;
            }
            const auto name = std::find(r.cluster_names.begin(), r.cluster_names.end(), row[1]);
            counts_ok = counts_ok && name != r.cluster_names.end() &&
                        s.counts[static_cast<std::size_t>(name - r.cluster_names.begin())] == value;
        }
        c.check("slices: count triples", counts_ok);

        bool hist_ok = true;
        std::map<std::pair<int, std::string>, std::size_t> hist_index;
        for (const auto& row : detail::read_csv(dir / "histograms.csv", histograms_header)) {
            const int cluster = static_cast<int>(parse_integer(row[0], "cluster"));
            auto [it, fresh_hist] = hist_index.try_emplace({cluster, row[2]}, r.histograms.size());
            if (fresh_hist) {
                ClusterHistogram h{cluster, detail::parse_band(row[2]), {}};
                h.histogram.months        = r.options.months;
                h.histogram.normalization = r.options.normalization;
                for (auto& v : h.histogram.counts) {
                    v.assign(static_cast<std::size_t>(r.options.months), 0);
                }
                r.histograms.push_back(std::move(h));
            }
            auto& h = r.histograms[it->second].histogram;
            const auto level = static_cast<std::size_t>(parse_integer(row[3], "level"));
            const auto month = static_cast<std::size_t>(parse_integer(row[4], "month"));
            if (level > 3 || month < 1 || month > h.counts[level].size()) {
                hist_ok = false;
                continue;
            }
            h.counts[level][month - 1] = static_cast<long>(parse_integer(row[5], "count"));
            h.proportions[level].resize(h.counts[level].size());
            h.proportions[level][month - 1] = field(row[6], "proportion");
        }
        for (auto& ch : r.histograms) {
            auto recomputed = ch.histogram;
            normalize_histogram(recomputed);
            for (std::size_t l = 0; l < 4; ++l) {
                for (std::size_t mo = 0; mo < recomputed.proportions[l].size(); ++mo) {
                    hist_ok = hist_ok && ch.histogram.proportions[l].size() == recomputed.proportions[l].size() &&
                              std::abs(ch.histogram.proportions[l][mo] - recomputed.proportions[l][mo]) <= 1e-12;
                }
            }
            ch.histogram = recomputed;
        }
        c.check("histograms: proportions match counts", hist_ok);
    }

    detail::derive_statistics(r);
    check_tests(c, dir, r.tests);
    check_summaries(c, dir, r.summaries);

    const auto kl_rows = detail::read_csv(dir / "kl.csv", kl_header);
    c.check("kl: count", kl_rows.size() == 4 * r.kl.size());
    for (std::size_t i = 0; i < std::min(kl_rows.size(), 4 * r.kl.size()); ++i) {
        const auto& row      = kl_rows[i];
        const auto& expected = r.kl[i / 4].values[i % 4];
        const auto reported  = parse_opt(row[5], "kl");
        const bool same_kind = reported.has_value() == expected.has_value();
        if (same_kind && expected) {
            c.close(fmt::format("kl: {} {} level {}", row[0], row[1], row[4]), *reported, *expected);
        }
        else {
            c.check(fmt::format("kl: {} {} level {}", row[0], row[1], row[4]), same_kind && row[0] == r.kl[i / 4].name,
                    "defined/undefined mismatch");
        }
    }
    check_summary_text(c, dir, render_exp1_summary(r));
}

CohortRatings read_cohort(const std::filesystem::path& path, std::string name, Checker& c)
{
    CohortRatings cr;
    cr.name = std::move(name);
    bool ok = true;
    for (const auto& row : detail::read_csv(path, cohort_header)) {
        AdoptionRating a{static_cast<long>(parse_integer(row[2], "level_sum")),
                         static_cast<int>(parse_integer(row[3], "decisions"))};
        ok = ok && a.decisions > 0 && field(row[4], "rating") == a.value();
        cr.session_ids.push_back(row[0]);
        cr.policies.push_back(row[1]);
        cr.ratings.push_back(a);
    }
    c.check(fmt::format("{}: ratings match level sums", path.filename().string()), ok);
    return cr;
}

void verify_comparison(const std::filesystem::path& dir, const ordered_json& m, VerifyReport& out)
{
    Checker c(out);
    const auto names = m.at("cohorts").get<std::vector<std::string>>();
    if (names.size() != 2) {
        throw DataError("comparison manifest needs two cohort names");
    }
    ComparisonReport r;
    r.a = read_cohort(dir / "cohort_a.csv", names[0], c);
    r.b = read_cohort(dir / "cohort_b.csv", names[1], c);
    if (r.a.ratings.empty() || r.b.ratings.empty()) {
        c.check("cohorts: nonempty", false, "a cohort table has no rows");
        return;
    }
    const auto va = r.a.values();
    const auto vb = r.b.values();
    r.summary_a   = {r.a.name, descriptive(va)};
    r.summary_b   = {r.b.name, descriptive(vb)};
    r.ks          = ks_two_sample(va, vb);
    r.mwu         = mann_whitney_u(va, vb, Alternative::TwoSided);
    check_tests(c, dir, {{"ks", r.ks}, {"mann-whitney", r.mwu}});
    check_summaries(c, dir, {r.summary_a, r.summary_b});
    check_summary_text(c, dir, render_comparison_summary(r));
}

} // namespace

VerifyReport verify_bundle(const std::filesystem::path& dir)
{
    ordered_json m;
    try {
        m = ordered_json::parse(read_text(dir / "manifest.json"));
    }
    catch (const nlohmann::json::exception& e) {
        throw DataError(fmt::format("{}: malformed manifest: {}", dir.string(), e.what()));
    }
    VerifyReport out;
    try {
        if (m.value("schema", "") != bundle_schema) {
            throw DataError(fmt::format("{}: not a report bundle", dir.string()));
        }
        out.kind = m.at("kind").get<std::string>();
        if (out.kind == "exp1") {
            verify_exp1(dir, m, out);
        }
        else if (out.kind == "compare") {
            verify_comparison(dir, m, out);
        }
        else {
            throw DataError(fmt::format("unknown bundle kind '{}'", out.kind));
        }
    }
    catch (const nlohmann::json::exception& e) {
        throw DataError(fmt::format("{}: malformed manifest: {}", dir.string(), e.what()));
    }
    catch (const ParseError& e) {
        throw DataError(fmt::format("{}: {}", dir.string(), e.what()));
    }
    return out;
}

} // namespace fieldlab
