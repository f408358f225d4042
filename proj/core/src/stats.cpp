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
#include "fieldlab/stats.h"

#include "fieldlab/errors.h"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <vector>

namespace fieldlab
{

std::string_view to_string(Alternative a)
{
    switch (a) {
    case Alternative::TwoSided:
        return "two-sided";
    case Alternative::Less:
        return "less";
    case Alternative::Greater:
        return "greater";
    }
    return "two-sided";
}

double normal_cdf(double z)
{
    return 0.5 * std::erfc(-z / std::numbers::sqrt2);
}

double normal_sf(double z)
{
    return 0.5 * std::erfc(z / std::numbers::sqrt2);
}

double kolmogorov_sf(double x)
{
    if (x <= 0.0) {
        return 1.0;
    }
    constexpr double pi = std::numbers::pi;
    if (x < 1.18) {
        // P(K <= x) = sqrt(2 pi) / x * sum exp(-(2k-1)^2 pi^2 / (8 x^2))
        double sum = 0.0;
        for (int k = 1; k <= 20; ++k) {
            const double t = (2.0 * k - 1.0) * pi / x;
            sum += std::exp(-t * t / 8.0);
        }
        return std::clamp(1.0 - std::sqrt(2.0 * pi) / x * sum, 0.0, 1.0);
    }
    double sum = 0.0;
    for (int k = 1; k <= 100; ++k) {
        const double term = std::exp(-2.0 * k * k * x * x);
        sum += (k % 2 == 1 ? 2.0 : -2.0) * term;
        if (term < 1e-300) {
            break;
        }
    }
    return std::clamp(sum, 0.0, 1.0);
}

namespace
{

void require_nonempty(std::span<const double> a, std::span<const double> b, const char* test)
{
    if (a.empty() || b.empty()) {
        throw InsufficientSample(fmt::format("{} needs two non-empty samples", test));
    }
}

/// Midranks of values (1-based) plus the sum of t^3 - t over tie groups.
std::vector<double> midranks(std::span<const double> values, double* tie_term)
{
    std::vector<std::size_t> order(values.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t i, std::size_t j) {
        return values[i] < values[j];
    });
    std::vector<double> ranks(values.size());
    double ties = 0.0;
    for (std::size_t i = 0; i < order.size();) {
        std::size_t j = i;
        while (j + 1 < order.size() && values[order[j + 1]] == values[order[i]]) {
            ++j;
        }
        const double rank = 0.5 * static_cast<double>(i + j) + 1.0;
        for (std::size_t t = i; t <= j; ++t) {
            ranks[order[t]] = rank;
        }
        const double t = static_cast<double>(j - i + 1);
        ties += t * t * t - t;
        i = j + 1;
    }
    if (tie_term) {
        *tie_term = ties;
    }
    return ranks;
}

/// Calls visit(mask) for every n1-subset of n items (bit i set = item i in sample a).
template <class Visit>
void for_each_split(std::size_t n, std::size_t n1, Visit&& visit)
{
    std::vector<bool> chosen(n, false);
    std::fill(chosen.begin(), chosen.begin() + static_cast<std::ptrdiff_t>(n1), true);
    // prev_permutation over a sorted-descending bool vector visits all combinations.
    do {
        visit(chosen);
    } while (std::prev_permutation(chosen.begin(), chosen.end()));
}

bool use_exact(PValueMethod method, std::size_t n1, std::size_t n2)
{
    if (method == PValueMethod::Auto) {
        return std::max(n1, n2) <= 8;
    }
    if (method == PValueMethod::Exact && n1 + n2 > 24) {
        throw_invalid_config("exact enumeration is limited to 24 pooled observations");
    }
    return method == PValueMethod::Exact;
}

double one_or_two_sided(Alternative alternative, double p_less, double p_greater)
{
    switch (alternative) {
    case Alternative::Less:
        return std::min(1.0, p_less);
    case Alternative::Greater:
        return std::min(1.0, p_greater);
    case Alternative::TwoSided:
        return std::min(1.0, 2.0 * std::min(p_less, p_greater));
    }
    return 1.0;
}

double ks_statistic(std::span<const double> a, std::span<const double> b)
{
    std::vector<double> sa(a.begin(), a.end());
    std::vector<double> sb(b.begin(), b.end());
    std::sort(sa.begin(), sa.end());
    std::sort(sb.begin(), sb.end());
    const double n1 = static_cast<double>(sa.size());
    const double n2 = static_cast<double>(sb.size());
    std::size_t i = 0;
    std::size_t j = 0;
    double d      = 0.0;
    while (i < sa.size() || j < sb.size()) {
        double x;
        if (j >= sb.size() || (i < sa.size() && sa[i] <= sb[j])) {
            x = sa[i];
        }
        else {
            x = sb[j];
        }
        while (i < sa.size() && sa[i] == x) {
            ++i;
        }
        while (j < sb.size() && sb[j] == x) {
            ++j;
        }
        d = std::max(d, std::abs(static_cast<double>(i) / n1 - static_cast<double>(j) / n2));
    }
    return d;
}

} // namespace

TestResult mann_whitney_u(std::span<const double> a, std::span<const double> b, Alternative alternative,
                          PValueMethod method)
{
    require_nonempty(a, b, "Mann-Whitney U");
    const std::size_t n1 = a.size();
    const std::size_t n2 = b.size();
    std::vector<double> pooled(a.begin(), a.end());
    pooled.insert(pooled.end(), b.begin(), b.end());
    double tie_term   = 0.0;
    const auto ranks  = midranks(pooled, &tie_term);
    const double r1   = std::accumulate(ranks.begin(), ranks.begin() + static_cast<std::ptrdiff_t>(n1), 0.0);
    const double base = static_cast<double>(n1) * static_cast<double>(n1 + 1) / 2.0;
    const double u    = r1 - base;

    TestResult result;
    result.statistic   = u;
    result.alternative = alternative;
    result.n1          = n1;
    result.n2          = n2;

    if (use_exact(method, n1, n2)) {
        long total     = 0;
        long at_most   = 0;
        long at_least  = 0;
        const double tolerance = 1e-9;
        for_each_split(pooled.size(), n1, [&](const std::vector<bool>& in_a) {
            double sum = 0.0;
            for (std::size_t i = 0; i < in_a.size(); ++i) {
                if (in_a[i]) {
                    sum += ranks[i];
                }
            }
            const double candidate = sum - base;
            ++total;
            at_most += candidate <= u + tolerance ? 1 : 0;
            at_least += candidate >= u - tolerance ? 1 : 0;
        });
        result.method  = "mann-whitney-exact";
        result.p_value = one_or_two_sided(alternative, static_cast<double>(at_most) / static_cast<double>(total),
                                          static_cast<double>(at_least) / static_cast<double>(total));
        return result;
    }

    const double N    = static_cast<double>(n1 + n2);
    const double mean = static_cast<double>(n1) * static_cast<double>(n2) / 2.0;
    const double var  = static_cast<double>(n1) * static_cast<double>(n2) / 12.0 * ((N + 1.0) - tie_term / (N * (N - 1.0)));
    result.method     = "mann-whitney-normal";
    if (!(var > 0.0)) {
        result.p_value = 1.0;
        return result;
    }
    const double sd        = std::sqrt(var);
    const double p_greater = normal_sf((u - mean - 0.5) / sd);
    const double p_less    = normal_cdf((u - mean + 0.5) / sd);
    if (alternative == Alternative::TwoSided) {
        const double z = (std::abs(u - mean) - 0.5) / sd;
        result.p_value = std::min(1.0, 2.0 * normal_sf(std::max(z, 0.0)));
    }
    else {
        result.p_value = one_or_two_sided(alternative, p_less, p_greater);
    }
    return result;
}

TestResult ks_two_sample(std::span<const double> a, std::span<const double> b, PValueMethod method)
{
    require_nonempty(a, b, "Kolmogorov-Smirnov");
    TestResult result;
    result.statistic   = ks_statistic(a, b);
    result.alternative = Alternative::TwoSided;
    result.n1          = a.size();
    result.n2          = b.size();

    if (use_exact(method, a.size(), b.size())) {
        std::vector<double> pooled(a.begin(), a.end());
        pooled.insert(pooled.end(), b.begin(), b.end());
        long total    = 0;
        long extreme  = 0;
        std::vector<double> xa;
        std::vector<double> xb;
        for_each_split(pooled.size(), a.size(), [&](const std::vector<bool>& in_a) {
            xa.clear();
            xb.clear();
            for (std::size_t i = 0; i < pooled.size(); ++i) {
                (in_a[i] ? xa : xb).push_back(pooled[i]);
            }
            ++total;
            extreme += ks_statistic(xa, xb) >= result.statistic - 1e-12 ? 1 : 0;
        });
        result.method  = "ks-exact";
        result.p_value = static_cast<double>(extreme) / static_cast<double>(total);
        return result;
    }
    const double n1 = static_cast<double>(a.size());
    const double n2 = static_cast<double>(b.size());
    result.method   = "ks-asymptotic";
    result.p_value  = kolmogorov_sf(std::sqrt(n1 * n2 / (n1 + n2)) * result.statistic);
    return result;
}

TestResult ks_one_sample(std::span<const double> x, const std::function<double(double)>& cdf)
{
    if (x.empty()) {
        throw InsufficientSample("Kolmogorov-Smirnov needs a non-empty sample");
    }
    std::vector<double> s(x.begin(), x.end());
    std::sort(s.begin(), s.end());
    const double n = static_cast<double>(s.size());
    double d       = 0.0;
    for (std::size_t i = 0; i < s.size(); ++i) {
        const double f = cdf(s[i]);
        d              = std::max({d, static_cast<double>(i + 1) / n - f, f - static_cast<double>(i) / n});
    }
    TestResult result;
    result.method    = "ks-one-sample-asymptotic";
    result.statistic = d;
    result.n1        = s.size();
    result.p_value   = kolmogorov_sf(std::sqrt(n) * d);
    return result;
}

double kl_divergence(std::span<const double> p, std::span<const double> q, double epsilon)
{
    if (p.size() != q.size() || p.empty()) {
        throw_invalid_config("KL divergence needs distributions over the same non-empty support");
    }
    auto check = [](std::span<const double> d) {
        double sum = 0.0;
        for (double v : d) {
            if (v < 0.0) {
                throw_contract_violation("distribution has a negative entry");
            }
            sum += v;
        }
        if (std::abs(sum - 1.0) > 1e-9) {
            throw_contract_violation(fmt::format("distribution sums to {}, not 1", sum));
        }
    };
    check(p);
    check(q);
    const double k  = static_cast<double>(p.size());
    double kl       = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i) {
        const double ps = (p[i] + epsilon) / (1.0 + k * epsilon);
        const double qs = (q[i] + epsilon) / (1.0 + k * epsilon);
        kl += ps * std::log(ps / qs);
    }
    return std::max(kl, 0.0);
}

TestResult dagostino_pearson(std::span<const double> x)
{
    const std::size_t count = x.size();
    if (count < 20) {
        throw InsufficientSample(fmt::format("D'Agostino-Pearson needs at least 20 observations, got {}", count));
    }
    const double n    = static_cast<double>(count);
    const double mean = std::accumulate(x.begin(), x.end(), 0.0) / n;
    double m2 = 0.0;
    double m3 = 0.0;
    double m4 = 0.0;
    for (double v : x) {
        const double d  = v - mean;
        const double d2 = d * d;
        m2 += d2;
        m3 += d2 * d;
        m4 += d2 * d2;
    }
    m2 /= n;
    m3 /= n;
    m4 /= n;
    if (!(m2 > 0.0)) {
        throw DataError("D'Agostino-Pearson is undefined for a constant sample");
    }

    // Skewness z-score.
    const double b1    = m3 / std::pow(m2, 1.5);
    const double y     = b1 * std::sqrt((n + 1.0) * (n + 3.0) / (6.0 * (n - 2.0)));
    const double beta2 = 3.0 * (n * n + 27.0 * n - 70.0) * (n + 1.0) * (n + 3.0) /
                         ((n - 2.0) * (n + 5.0) * (n + 7.0) * (n + 9.0));
    const double w2    = -1.0 + std::sqrt(2.0 * (beta2 - 1.0));
    const double delta = 1.0 / std::sqrt(0.5 * std::log(w2));
    const double alpha = std::sqrt(2.0 / (w2 - 1.0));
    const double ya    = y / alpha;
    const double z_skew = delta * std::log(ya + std::sqrt(ya * ya + 1.0));

    // Kurtosis z-score.
    const double b2      = m4 / (m2 * m2);
    const double expect  = 3.0 * (n - 1.0) / (n + 1.0);
    const double var_b2  = 24.0 * n * (n - 2.0) * (n - 3.0) / ((n + 1.0) * (n + 1.0) * (n + 3.0) * (n + 5.0));
    const double xk      = (b2 - expect) / std::sqrt(var_b2);
    const double sqrt_beta1 = 6.0 * (n * n - 5.0 * n + 2.0) / ((n + 7.0) * (n + 9.0)) *
                              std::sqrt(6.0 * (n + 3.0) * (n + 5.0) / (n * (n - 2.0) * (n - 3.0)));
    const double a    = 6.0 + 8.0 / sqrt_beta1 * (2.0 / sqrt_beta1 + std::sqrt(1.0 + 4.0 / (sqrt_beta1 * sqrt_beta1)));
    const double term1 = 1.0 - 2.0 / (9.0 * a);
    const double denom = 1.0 + xk * std::sqrt(2.0 / (a - 4.0));
    const double term2 = std::copysign(std::cbrt((1.0 - 2.0 / a) / std::abs(denom)), denom);
    const double z_kurt = (term1 - term2) / std::sqrt(2.0 / (9.0 * a));

    TestResult result;
    result.method    = "dagostino-pearson";
    result.statistic = z_skew * z_skew + z_kurt * z_kurt;
    result.p_value   = std::exp(-result.statistic / 2.0);
    result.n1        = count;
    return result;
}

Descriptive descriptive(std::span<const double> x)
{
    if (x.empty()) {
        throw InsufficientSample("descriptive statistics of an empty sample");
    }
    std::vector<double> s(x.begin(), x.end());
    std::sort(s.begin(), s.end());
    Descriptive d;
    d.n    = s.size();
    d.min  = s.front();
    d.max  = s.back();
    d.mean = std::accumulate(s.begin(), s.end(), 0.0) / static_cast<double>(d.n);
    const std::size_t mid = d.n / 2;
    d.median = d.n % 2 == 1 ? s[mid] : 0.5 * (s[mid - 1] + s[mid]);
    if (d.n > 1) {
        double ss = 0.0;
        for (double v : s) {
            ss += (v - d.mean) * (v - d.mean);
        }
        d.sd = std::sqrt(ss / static_cast<double>(d.n - 1));
    }
    return d;
}

std::string format_reported(double value)
{
    if (value == 0.0) {
        return "0";
    }
    return fmt::format("{:.2f}", value);
}

std::string format_summary(const Descriptive& d)
{
    return fmt::format("{{median={}, mu={}, sigma={}, min = {}, max = {}}}", format_reported(d.median),
                       format_reported(d.mean), format_reported(d.sd), format_reported(d.min), format_reported(d.max));
}

} // namespace fieldlab
