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
#include "fieldlab/calibration.h"

#include "fieldlab/text_config.h"

#include <fmt/format.h>
#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <istream>
#include <limits>
#include <map>
#include <numeric>
#include <ostream>
#include <sstream>

namespace fieldlab
{

std::vector<CalibrationTarget> published_targets()
{
    return {
        {0.08, 0, 0.070}, {0.08, 1, 0.042}, {0.08, 2, 0.042}, {0.08, 3, 0.016},
        {0.3, 0, 0.418},  {0.3, 1, 0.411},  {0.3, 2, 0.332},  {0.3, 3, 0.193},
    };
}

std::vector<CalibrationTarget> parse_targets(std::istream& in)
{
    std::vector<CalibrationTarget> targets;
    std::string line;
    int number = 0;
    bool header_seen = false;
    while (std::getline(in, line)) {
        ++number;
        if (!line.empty() && line.back() == '\r') {
            line.pop_back();
        }
        if (line.empty() || line[0] == '#') {
            continue;
        }
        if (!header_seen) {
            if (line != "rate,level,target") {
                throw ParseError(fmt::format("targets line {}: expected header 'rate,level,target'", number));
            }
            header_seen = true;
            continue;
        }
        std::vector<std::string> fields;
        std::stringstream row(line);
        std::string field;
        while (std::getline(row, field, ',')) {
            fields.push_back(field);
        }
        if (fields.size() != 3) {
            throw ParseError(fmt::format("targets line {}: expected 3 columns", number));
        }
        CalibrationTarget t{parse_double(fields[0], "rate"), static_cast<int>(parse_integer(fields[1], "level")),
                            parse_double(fields[2], "target")};
        if (!(t.infection_rate > 0.0 && t.infection_rate < 1.0) || t.level < 0 || t.level > 3 ||
            !(t.probability > 0.0 && t.probability < 1.0)) {
            throw ParseError(fmt::format("targets line {}: value out of range", number));
        }
        targets.push_back(t);
    }
    if (!header_seen) {
        throw ParseError("targets file is empty");
    }
    return targets;
}

std::vector<CalibrationTarget> load_targets(const std::filesystem::path& path)
{
    std::ifstream in(path);
    if (!in) {
        throw DataError(fmt::format("cannot read {}", path.string()));
    }
    return parse_targets(in);
}

std::vector<CalibrationCell> evaluate_kernel(const TransmissionKernel& kernel, std::span<const CalibrationTarget> targets,
                                             long trials, std::uint64_t seed)
{
    std::map<double, std::array<InfectionEstimate, 4>> by_rate;
    for (const auto& t : targets) {
        if (by_rate.count(t.infection_rate)) {
            continue;
        }
        RoundConfig config;
        config.infection_rate = t.infection_rate;
        config.visibility     = Visibility::Full;
        config.kernel         = kernel;
        config.seed           = substream_key(seed, static_cast<std::uint64_t>(std::llround(t.infection_rate * 1e6)));
        by_rate.emplace(t.infection_rate, estimate_probe_levels(config, trials, true));
    }
    std::vector<CalibrationCell> cells;
    cells.reserve(targets.size());
    for (const auto& t : targets) {
        cells.push_back({t.infection_rate, t.level, t.probability,
                         by_rate.at(t.infection_rate)[static_cast<std::size_t>(t.level)]});
    }
    return cells;
}

double max_abs_error(std::span<const CalibrationCell> cells)
{
    double worst = 0.0;
    for (const auto& c : cells) {
        worst = std::max(worst, std::abs(c.error()));
    }
    return worst;
}

double ranking_shortfall(std::span<const CalibrationCell> cells, double rate, double margin)
{
    std::vector<const CalibrationCell*> at_rate;
    for (const auto& c : cells) {
        if (c.infection_rate == rate) {
            at_rate.push_back(&c);
        }
    }
    auto target_return = [](const CalibrationCell* c) {
        return expected_return(BiosecurityLevel(c->level), c->target);
    };
    std::sort(at_rate.begin(), at_rate.end(), [&](const CalibrationCell* a, const CalibrationCell* b) {
        return target_return(a) > target_return(b);
    });
    double shortfall = 0.0;
    for (std::size_t i = 0; i + 1 < at_rate.size(); ++i) {
        const double gap = expected_return(BiosecurityLevel(at_rate[i]->level), at_rate[i]->estimate.probability) -
                           expected_return(BiosecurityLevel(at_rate[i + 1]->level), at_rate[i + 1]->estimate.probability);
        shortfall = std::max(shortfall, margin - gap);
    }
    return shortfall;
}

namespace
{

// Unconstrained parameters: log distance scale, then logits of the damping
// ratios between consecutive levels. Ratios in (0, 1) keep the damping table
// strictly decreasing.
using Params = std::vector<double>;

double logistic(double x)
{
    return 1.0 / (1.0 + std::exp(-x));
}

double logit(double p)
{
    return std::log(p / (1.0 - p));
}

TransmissionKernel kernel_from(const Params& p, KernelForm form)
{
    const double scale = std::clamp(std::exp(p[0]), 0.01, 2.0);
    if (form == KernelForm::Geometric) {
        return TransmissionKernel::geometric(scale, std::clamp(logistic(p[1]), 1e-6, 1.0 - 1e-9));
    }
    const double d1 = std::clamp(logistic(p[1]), 1e-6, 1.0 - 1e-9);
    const double d2 = d1 * std::clamp(logistic(p[2]), 1e-6, 1.0 - 1e-9);
    const double d3 = d2 * std::clamp(logistic(p[3]), 1e-6, 1.0 - 1e-9);
    return TransmissionKernel(scale, {1.0, d1, d2, d3});
}

/// Smooth stand-in for the max absolute error (an L8 norm of the errors).
double soft_max_error(std::span<const CalibrationCell> cells)
{
    double sum = 0.0;
    for (const auto& c : cells) {
        sum += std::pow(std::abs(c.error()), 8.0);
    }
    return std::pow(sum / static_cast<double>(cells.size()), 1.0 / 8.0);
}

/// Nelder-Mead simplex search; returns the best vertex found.
template <class F>
Params nelder_mead(F&& f, Params start, double initial_step, int budget)
{
    const std::size_t dim = start.size();
    std::vector<Params> simplex{start};
    for (std::size_t i = 0; i < dim; ++i) {
        Params v = start;
        v[i] += initial_step;
        simplex.push_back(v);
    }
    std::vector<double> values;
    for (const auto& v : simplex) {
        values.push_back(f(v));
    }
    int used = static_cast<int>(simplex.size());

    auto combine = [](const Params& a, const Params& b, double t) {
        Params out(a.size());
        for (std::size_t i = 0; i < a.size(); ++i) {
            out[i] = a[i] + t * (b[i] - a[i]);
        }
        return out;
    };

    while (used < budget) {
        std::vector<std::size_t> order(simplex.size());
        std::iota(order.begin(), order.end(), 0);
        std::sort(order.begin(), order.end(), [&](std::size_t i, std::size_t j) {
            return values[i] < values[j];
        });
        const auto best  = order.front();
        const auto worst = order.back();
        const auto second_worst = order[order.size() - 2];
        if (values[worst] - values[best] < 1e-5) {
            break;
        }

        Params centroid(dim, 0.0);
        for (std::size_t i = 0; i < simplex.size(); ++i) {
            if (i == worst) {
                continue;
            }
            for (std::size_t d = 0; d < dim; ++d) {
                centroid[d] += simplex[i][d] / static_cast<double>(dim);
            }
        }
        const Params reflected = combine(centroid, simplex[worst], -1.0);
        const double fr        = f(reflected);
        ++used;
        if (fr < values[best]) {
            const Params expanded = combine(centroid, simplex[worst], -2.0);
            const double fe       = f(expanded);
            ++used;
            if (fe < fr) {
                simplex[worst] = expanded;
                values[worst]  = fe;
            }
            else {
                simplex[worst] = reflected;
                values[worst]  = fr;
            }
            continue;
        }
        if (fr < values[second_worst]) {
            simplex[worst] = reflected;
            values[worst]  = fr;
            continue;
        }
        const bool outside      = fr < values[worst];
        const Params contracted = outside ? combine(centroid, reflected, 0.5) : combine(centroid, simplex[worst], 0.5);
        const double fc         = f(contracted);
        ++used;
        if (fc < std::min(fr, values[worst])) {
            simplex[worst] = contracted;
            values[worst]  = fc;
            continue;
        }
        for (std::size_t i = 0; i < simplex.size(); ++i) {
            if (i == best) {
                continue;
            }
            simplex[i] = combine(simplex[best], simplex[i], 0.5);
            values[i]  = f(simplex[i]);
            ++used;
        }
    }
    const auto best = static_cast<std::size_t>(std::min_element(values.begin(), values.end()) - values.begin());
    return simplex[best];
}

} // namespace

CalibrationResult calibrate_kernel(std::span<const CalibrationTarget> targets, const CalibrationOptions& options)
{
    if (targets.empty()) {
        throw_invalid_config("calibration needs at least one target");
    }
    if (options.trials < 4) {
        throw_invalid_config("calibration needs at least 4 trials per evaluation");
    }

    int evaluations = 0;
    auto cells_for  = [&](const Params& p, long trials) {
        ++evaluations;
        return evaluate_kernel(kernel_from(p, options.form), targets, trials, options.seed);
    };

    // Coarse grid over (distance scale, geometric damping) on a quarter of the trials.
    Params start;
    double start_error = std::numeric_limits<double>::infinity();
    for (double scale : {0.08, 0.10, 0.12, 0.14, 0.16, 0.18, 0.22}) {
        for (double beta : {0.4, 0.55, 0.7, 0.85, 0.95}) {
            Params p = {std::log(scale), logit(beta)};
            if (options.form == KernelForm::LevelTable) {
                p.push_back(logit(beta));
                p.push_back(logit(beta));
            }
            const double e = max_abs_error(cells_for(p, std::max(4L, options.trials / 4)));
            if (e < start_error) {
                start_error = e;
                start       = p;
            }
        }
    }

    // Simplex refinement on common random numbers at the full trial count,
    // restarted from the best vertex with a shrinking step while budget lasts.
    auto objective = [&](const Params& p) {
        const auto cells = cells_for(p, options.trials);
        double penalty   = 0.0;
        for (double rate : options.ranked_rates) {
            // Dollars to probability units: one infection swings about 40,000.
            penalty += std::max(0.0, ranking_shortfall(cells, rate, options.rank_margin)) / 40000.0;
        }
        return soft_max_error(cells) + penalty;
    };
    Params best = start;
    for (double step = 0.3; step > 0.005; step *= 0.4) {
        const int budget = options.max_evaluations - evaluations;
        if (budget < static_cast<int>(best.size()) + 2) {
            break;
        }
        best = nelder_mead(objective, best, step, budget);
    }

    CalibrationResult result;
    result.kernel      = kernel_from(best, options.form);
    result.cells       = evaluate_kernel(result.kernel, targets, options.trials, options.seed);
    result.max_error   = max_abs_error(result.cells);
    for (double rate : options.ranked_rates) {
        result.ranking_preserved =
            result.ranking_preserved && ranking_shortfall(result.cells, rate, options.rank_margin) <= 0.0;
    }
    result.conforming  = result.max_error <= options.tolerance && result.ranking_preserved;
    result.evaluations = evaluations;
    result.trials      = options.trials;
    return result;
}

void write_calibration_table(std::ostream& out, const CalibrationResult& result)
{
    const auto& k = result.kernel;
    out << fmt::format("kernel: distance_scale={:.6f} damping=[{:.6f}, {:.6f}, {:.6f}, {:.6f}]\n",
                       k.distance_scale(), k.damping()[0], k.damping()[1], k.damping()[2], k.damping()[3]);
    out << fmt::format("trials per cell: {}  evaluations: {}  max |error|: {:.4f}  ranking {}  {}\n", result.trials,
                       result.evaluations, result.max_error, result.ranking_preserved ? "preserved" : "BROKEN",
                       result.conforming ? "conforming" : "NON-CONFORMING");
    out << fmt::format("{:>6} {:>8} {:>8} {:>9} {:>8} {:>8} {:>14} {:>14}\n", "rate", "level", "target", "estimate",
                       "+/-", "error", "E[return]", "E[target]");
    for (const auto& c : result.cells) {
        const BiosecurityLevel level(c.level);
        out << fmt::format("{:>6} {:>8} {:>8.3f} {:>9.4f} {:>8.4f} {:>+8.4f} {:>14.2f} {:>14.2f}\n", c.infection_rate,
                           level_name(level), c.target, c.estimate.probability, c.estimate.half_width, c.error(),
                           expected_return(level, c.estimate.probability), expected_return(level, c.target));
    }
}

void write_calibration_csv(std::ostream& out, std::span<const CalibrationCell> cells)
{
    out << "rate,level,target,estimate,half_width,error\n";
    for (const auto& c : cells) {
        out << fmt::format("{},{},{},{:.6f},{:.6f},{:.6f}\n", c.infection_rate, c.level, c.target,
                           c.estimate.probability, c.estimate.half_width, c.error());
    }
}

void write_kernel_file(const std::filesystem::path& path, const TransmissionKernel& kernel)
{
    nlohmann::ordered_json j;
    j["distance_scale"] = kernel.distance_scale();
    j["damping"]        = kernel.damping();
    std::ofstream out(path);
    if (!out) {
        throw DataError(fmt::format("cannot write {}", path.string()));
    }
    out << j.dump(2) << '\n';
}

TransmissionKernel read_kernel_file(const std::filesystem::path& path)
{
    std::ifstream in(path);
    if (!in) {
        throw DataError(fmt::format("cannot read {}", path.string()));
    }
    try {
        const auto j = nlohmann::json::parse(in);
        return TransmissionKernel(j.at("distance_scale").get<double>(),
                                  j.at("damping").get<TransmissionKernel::DampingTable>());
    }
    catch (const nlohmann::json::exception& e) {
        throw ParseError(fmt::format("kernel file {}: {}", path.string(), e.what()));
    }
    catch (const InvalidConfig& e) {
        throw ParseError(fmt::format("kernel file {}: {}", path.string(), e.what()));
    }
}

} // namespace fieldlab
