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
#ifndef FIELDLAB_STATS_H
#define FIELDLAB_STATS_H

#include <cstddef>
#include <functional>
#include <span>
#include <string>
#include <string_view>

namespace fieldlab
{

enum class Tails
{
    One,
    Two,
};

/// Direction of the alternative hypothesis for sample a relative to sample b.
enum class Alternative
{
    TwoSided,
    Less,    ///< a tends to be smaller than b
    Greater, ///< a tends to be larger than b
};

std::string_view to_string(Alternative a);
constexpr Tails tails_of(Alternative a)
{
    return a == Alternative::TwoSided ? Tails::Two : Tails::One;
}

struct TestResult {
    std::string method;
    double statistic = 0.0;
    double p_value   = 1.0;
    Alternative alternative = Alternative::TwoSided;
    std::size_t n1 = 0;
    std::size_t n2 = 0;

    Tails tails() const
    {
        return tails_of(alternative);
    }
};

enum class PValueMethod
{
    Auto,       ///< exact enumeration when max(n1, n2) <= 8, else asymptotic
    Exact,      ///< enumerate every split of the pooled sample
    Asymptotic,
};

double normal_cdf(double z);
double normal_sf(double z);
/// Survival function of the Kolmogorov distribution, P(K > x).
double kolmogorov_sf(double x);

/**
 * Mann-Whitney U of sample a (number of pairs with a > b, ties count one
 * half). Midranks for ties. The asymptotic p-value uses the tie-corrected
 * variance with a continuity correction of 1/2. InsufficientSample for an
 * empty sample.
 */
TestResult mann_whitney_u(std::span<const double> a, std::span<const double> b,
                          Alternative alternative = Alternative::TwoSided, PValueMethod method = PValueMethod::Auto);

/// Two-sample Kolmogorov-Smirnov, two-sided: D = sup |F_a - F_b|; the
/// asymptotic p-value uses the effective size n1 n2 / (n1 + n2).
TestResult ks_two_sample(std::span<const double> a, std::span<const double> b,
                         PValueMethod method = PValueMethod::Auto);

/// One-sample KS against a continuous CDF, asymptotic p-value.
TestResult ks_one_sample(std::span<const double> x, const std::function<double(double)>& cdf);

/// Sum of p_i ln(p_i / q_i) after adding epsilon to every cell and
/// renormalising. InvalidConfig on different sizes; ContractViolation when an
/// input does not sum to 1 within 1e-9.
double kl_divergence(std::span<const double> p, std::span<const double> q, double epsilon = 1e-9);

/// D'Agostino-Pearson omnibus K^2 with a chi-square(2) p-value.
/// InsufficientSample when n < 20; DataError for a constant sample.
TestResult dagostino_pearson(std::span<const double> x);

struct Descriptive {
    double mean   = 0.0;
    double median = 0.0;
    double sd     = 0.0; ///< n - 1 denominator; 0 for a single value
    double min    = 0.0;
    double max    = 0.0;
    std::size_t n = 0;
};

Descriptive descriptive(std::span<const double> x);

/// "{median=1.40, mu=1.40, sigma=0.62, min = 0, max = 2.50}"
std::string format_summary(const Descriptive& d);

/// Number with two decimals, except that exact zero prints as "0".
std::string format_reported(double value);

} // namespace fieldlab

#endif // FIELDLAB_STATS_H
