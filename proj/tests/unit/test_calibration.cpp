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
#include "fieldlab/errors.h"

#include "test_support.h"

#include <gtest/gtest.h>

#include <sstream>

using namespace fieldlab;

TEST(TestCalibration, PublishedTargets)
{
    auto targets = published_targets();
    ASSERT_EQ(targets.size(), 8u);
    const double expected[] = {0.07, 0.042, 0.042, 0.016, 0.418, 0.411, 0.332, 0.193};
    for (std::size_t i = 0; i < 8; ++i) {
        EXPECT_EQ(targets[i].infection_rate, i < 4 ? 0.08 : 0.3);
        EXPECT_EQ(targets[i].level, static_cast<int>(i % 4));
        EXPECT_EQ(targets[i].probability, expected[i]);
    }
    auto from_file = load_targets(FIELDLAB_DATA_DIR "/infection_targets.csv");
    ASSERT_EQ(from_file.size(), 8u);
    for (std::size_t i = 0; i < 8; ++i) {
        EXPECT_EQ(from_file[i].probability, targets[i].probability);
    }
}

TEST(TestCalibration, ParseErrors)
{
    for (const char* text : {"", "rate,level\n0.08,0\n", "rate,level,target\n0.08,0\n",
                             "rate,level,target\n0.08,zero,0.1\n", "rate,level,target\n0.08,5,0.1\n",
                             "rate,level,target\n0.08,0,1.2\n", "rate,level,target\n1.5,0,0.2\n"}) {
        std::istringstream in(text);
        EXPECT_THROW(parse_targets(in), ParseError) << text;
    }
    std::istringstream ok("# comment\nrate,level,target\r\n0.08,1,0.05\r\n\n");
    auto targets = parse_targets(ok);
    ASSERT_EQ(targets.size(), 1u);
    EXPECT_EQ(targets[0].level, 1);
}

TEST(TestCalibration, EmptyTargetSet)
{
    EXPECT_THROW(calibrate_kernel({}), InvalidConfig);
}

TEST(TestCalibration, KernelFileRoundTrip)
{
    testkit::TempDir dir;
    auto kernel = default_kernel();
    write_kernel_file(dir / "k.json", kernel);
    EXPECT_EQ(read_kernel_file(dir / "k.json"), kernel);
    EXPECT_EQ(read_kernel_file(FIELDLAB_DATA_DIR "/kernel.json"), kernel);
    testkit::write_file(dir / "bad.json", "{\"distance_scale\": 0.2, \"damping\": [1, 2, 0.5, 0.1]}");
    EXPECT_THROW(read_kernel_file(dir / "bad.json"), ParseError);
    testkit::write_file(dir / "broken.json", "{");
    EXPECT_THROW(read_kernel_file(dir / "broken.json"), ParseError);
}

TEST(TestCalibration, EvaluateIsDeterministic)
{
    auto targets = published_targets();
    auto a       = evaluate_kernel(default_kernel(), targets, 300, 4);
    auto b       = evaluate_kernel(default_kernel(), targets, 300, 4);
    ASSERT_EQ(a.size(), 8u);
    for (std::size_t i = 0; i < a.size(); ++i) {
        EXPECT_EQ(a[i].estimate.infections, b[i].estimate.infections);
        EXPECT_EQ(a[i].target, targets[i].probability);
    }
}

TEST(TestCalibration, RecoversSelfGeneratedTargets)
{
    // targets produced by a known kernel under the same seed and trials
    const auto truth  = TransmissionKernel(0.11, {1.0, 0.8, 0.5, 0.2});
    const long trials = 2000;
    const std::uint64_t seed = 99;
    auto cells = evaluate_kernel(truth, published_targets(), trials, seed);
    std::vector<CalibrationTarget> targets;
    for (const auto& c : cells) {
        targets.push_back({c.infection_rate, c.level, c.estimate.probability});
    }
    CalibrationOptions options;
    options.trials          = trials;
    options.seed            = seed;
    options.max_evaluations = 200;
    auto result             = calibrate_kernel(targets, options);
    EXPECT_LE(result.max_error, 0.01);
    EXPECT_TRUE(result.conforming);
    auto check = evaluate_kernel(result.kernel, targets, trials, seed);
    EXPECT_LE(max_abs_error(check), 0.01);
}

TEST(TestCalibration, RankingShortfall)
{
    auto make = [](int level, double target, double p) {
        CalibrationCell c{0.3, level, target, make_estimate(static_cast<long>(p * 1000), 1000)};
        return c;
    };
    std::vector<CalibrationCell> cells = {make(0, 0.418, 0.418), make(1, 0.411, 0.411), make(2, 0.332, 0.332),
                                          make(3, 0.193, 0.193)};
    EXPECT_EQ(ranking_shortfall(cells, 0.3, 50.0), 0.0);
    // Low overtaking None by $200 breaks the ranking
    cells[1] = make(1, 0.411, 0.392);
    EXPECT_GT(ranking_shortfall(cells, 0.3, 50.0), 0.0);
}

TEST(TestCalibration, CsvColumns)
{
    auto cells = evaluate_kernel(default_kernel(), published_targets(), 100, 1);
    std::ostringstream out;
    write_calibration_csv(out, cells);
    std::istringstream in(out.str());
    std::string header;
    std::getline(in, header);
    EXPECT_EQ(header, "rate,level,target,estimate,half_width,error");
    int rows = 0;
    for (std::string line; std::getline(in, line);) {
        ++rows;
    }
    EXPECT_EQ(rows, 8);
}
