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
#ifndef FIELDLAB_CALIBRATION_H
#define FIELDLAB_CALIBRATION_H

#include "fieldlab/metrics.h"
#include "fieldlab/simulation.h"

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <vector>

namespace fieldlab
{

/// Target infection probability of the probe policy at one (rate, level) cell.
struct CalibrationTarget {
    double infection_rate;
    int level;
    double probability;
};

/// The eight percentage cells of the published expected-returns table.
std::vector<CalibrationTarget> published_targets();

/// CSV with header `rate,level,target`. ParseError on malformed rows.
std::vector<CalibrationTarget> parse_targets(std::istream& in);
std::vector<CalibrationTarget> load_targets(const std::filesystem::path& path);

enum class KernelForm
{
    LevelTable, ///< free damping per level (distance scale + 3 parameters)
    Geometric,  ///< damping beta^level (distance scale + 1 parameter)
};

struct CalibrationOptions {
    long trials             = 4000; ///< per cell and evaluation
    std::uint64_t seed      = 20190301;
    double tolerance        = 0.02;
    KernelForm form         = KernelForm::LevelTable;
    int max_evaluations     = 250;
    /// Rates at which the estimates must rank the levels by expected return
    /// exactly as the targets do, each gap at least \`rank_margin\` dollars.
    std::vector<double> ranked_rates;
    double rank_margin = 50.0;
};

struct CalibrationCell {
    double infection_rate;
    int level;
    double target;
    InfectionEstimate estimate;

    double error() const
    {
        return estimate.probability - target;
    }
};

struct CalibrationResult {
    TransmissionKernel kernel = default_kernel();
    std::vector<CalibrationCell> cells;
    double max_error = 0.0;
    bool conforming  = false;
    bool ranking_preserved = true;
    int evaluations  = 0;
    long trials      = 0;
};

/**
 * Monte Carlo estimates of every target cell under the kernel. Neighbour
 * biosecurity alternates Low/High between trials and all visibility is Full;
 * trials of the same rate share seeds across kernels.
 */
std::vector<CalibrationCell> evaluate_kernel(const TransmissionKernel& kernel, std::span<const CalibrationTarget> targets,
                                             long trials, std::uint64_t seed);

double max_abs_error(std::span<const CalibrationCell> cells);

/// Worst shortfall (dollars) of the expected-return gaps below the margin, over
/// consecutive levels in the targets' ranking at the given rate; 0 when every
/// gap is at least \`margin\`.
double ranking_shortfall(std::span<const CalibrationCell> cells, double rate, double margin);

/**
 * Fits the kernel to the targets by minimising the max absolute error.
 *
 * A coarse grid over (distance scale, geometric damping) at a quarter of the
 * trials picks the start; a Nelder-Mead simplex on a smoothed max error then
 * refines every parameter on common random numbers. The result is flagged
 * non-conforming when the best kernel misses the tolerance or breaks a
 * required expected-return ranking.
 * Throws InvalidConfig for an empty target set.
 */
CalibrationResult calibrate_kernel(std::span<const CalibrationTarget> targets, const CalibrationOptions& options = {});

/// Plain-text table of the cells, with expected returns.
void write_calibration_table(std::ostream& out, const CalibrationResult& result);
/// Columns: rate,level,target,estimate,half_width,error.
void write_calibration_csv(std::ostream& out, std::span<const CalibrationCell> cells);

void write_kernel_file(const std::filesystem::path& path, const TransmissionKernel& kernel);
TransmissionKernel read_kernel_file(const std::filesystem::path& path);

} // namespace fieldlab

#endif // FIELDLAB_CALIBRATION_H
