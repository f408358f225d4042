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
#ifndef FIELDLAB_SERVICE_SERVICE_CONFIG_H
#define FIELDLAB_SERVICE_SERVICE_CONFIG_H

#include "fieldlab/schedule.h"
#include "fieldlab/simulation.h"

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace fieldlab::service
{

struct ServiceConfig {
    std::string host = "127.0.0.1";
    int port         = 8080;
    std::filesystem::path data_dir = "fieldlab-data";
    std::chrono::milliseconds abandon_timeout = std::chrono::minutes(30);
    std::optional<std::filesystem::path> static_dir;
    std::vector<std::string> cohorts = {"mturk", "expo", "bot"};
    /// Seeds sessions created without an explicit seed.
    std::uint64_t seed = 1;
    TransmissionKernel kernel = default_kernel();
    /// Replaces every round's infection rate; for smoke tests only.
    std::optional<double> rate_override;
};

using EnvLookup = std::function<std::optional<std::string>(const std::string&)>;

/// Process environment.
std::optional<std::string> process_env(const std::string& name);

/**
 * Reads the key/value file, if given, then applies FIELDLAB_PORT,
 * FIELDLAB_DATA_DIR and FIELDLAB_TIMEOUT_SECONDS from the environment.
 * Keys: host, port, data_dir, timeout_seconds, static_dir, cohorts, seed,
 * kernel_file, rate_override. InvalidConfig on bad values or unknown keys.
 */
ServiceConfig load_service_config(const std::optional<std::filesystem::path>& file, const EnvLookup& env = process_env);

/// Simulation dollars per currency unit for a cohort and design.
struct PayoutPolicy {
    double divisor = 50000.0;

    /// max(0, balance) / divisor, rounded to cents.
    double real_payout(double balance) const;
};

/// 50,000 for FullFactorial; for ConstantRate 12,000 for "expo" and 23,500 otherwise.
PayoutPolicy payout_policy(const std::string& cohort, ScheduleDesign design);

} // namespace fieldlab::service

#endif // FIELDLAB_SERVICE_SERVICE_CONFIG_H
