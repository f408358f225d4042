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
#ifndef FIELDLAB_PIPELINE_DETAIL_H
#define FIELDLAB_PIPELINE_DETAIL_H

#include "fieldlab/pipeline.h"

#include <string>
#include <string_view>
#include <vector>

namespace fieldlab::detail
{

std::string_view band_name(RateBand band);
RateBand parse_band(std::string_view s);

/// Reorders the centroids (RA, RT, O for k = 3, else by descending
/// coordinate sum) and relabels the assignments to match.
void canonicalize(ClusterModel& model);
std::vector<std::string> cluster_names(int k);
/// Rank of each cluster by ascending coordinate sum, the order used for label tests.
std::vector<int> risk_ranks(const std::vector<Point>& centroids);

/// Everything derivable from participants, slices and histogram counts:
/// tests, summaries, KL vectors and recovery accuracy.
void derive_statistics(Exp1Report& report);

/// Shortest text that parses back to the same double.
std::string number(double v);

std::string csv_row(const std::vector<std::string>& fields);
std::vector<std::vector<std::string>> read_csv(const std::filesystem::path& path,
                                               const std::vector<std::string>& header);

} // namespace fieldlab::detail

#endif // FIELDLAB_PIPELINE_DETAIL_H
