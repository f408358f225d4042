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
#include "fieldlab/service/service_config.h"
#include "fieldlab/calibration.h"
#include "fieldlab/errors.h"
#include "fieldlab/text_config.h"

#include <fmt/format.h>

#include <cmath>
#include <cstdlib>
#include <set>

namespace fieldlab::service
{

std::optional<std::string> process_env(const std::string& name)
{
    if (const char* v = std::getenv(name.c_str())) {
        return std::string(v);
    }
    return std::nullopt;
}

namespace
{

int parse_port(const std::string& text)
{
    const auto port = parse_integer(text, "port");
    if (port < 0 || port > 65535) {
        throw_invalid_config(fmt::format("port {} out of range", port));
    }
    return static_cast<int>(port);
}

std::chrono::milliseconds parse_timeout(const std::string& text)
{
    const double seconds = parse_double(text, "timeout_seconds");
    if (!(seconds > 0.0)) {
        throw_invalid_config("timeout_seconds must be positive");
    }
    return std::chrono::milliseconds(std::llround(seconds * 1000.0));
}

} // namespace

ServiceConfig load_service_config(const std::optional<std::filesystem::path>& file, const EnvLookup& env)
{
    ServiceConfig c;
    if (file) {
        static const std::set<std::string> known = {"host",   "port",  "data_dir",    "timeout_seconds", "static_dir",
                                                    "cohorts", "seed", "kernel_file", "rate_override"};
        const auto cfg = TextConfig::load(*file);
        for (const auto& [key, value] : cfg.entries()) {
            if (!known.count(key)) {
                throw_invalid_config(fmt::format("unknown service config key '{}'", key));
            }
        }
        // relative paths in the file are taken from the file's directory
        const auto base = file->parent_path();
        auto resolve    = [&](const std::string& p) {
            const std::filesystem::path path(p);
            return path.is_absolute() ? path : base / path;
        };
        if (auto v = cfg.get("host")) {
            c.host = *v;
        }
        if (auto v = cfg.get("port")) {
            c.port = parse_port(*v);
        }
        if (auto v = cfg.get("data_dir")) {
            c.data_dir = resolve(*v);
        }
        if (auto v = cfg.get("timeout_seconds")) {
            c.abandon_timeout = parse_timeout(*v);
        }
        if (auto v = cfg.get("static_dir")) {
            c.static_dir = resolve(*v);
        }
        if (auto v = cfg.get("cohorts")) {
            c.cohorts = split_words(*v);
        }
        if (auto v = cfg.get("seed")) {
            c.seed = parse_unsigned(*v, "seed");
        }
        if (auto v = cfg.get("kernel_file")) {
            c.kernel = read_kernel_file(resolve(*v));
        }
        if (auto v = cfg.get("rate_override")) {
            c.rate_override = parse_double(*v, "rate_override");
        }
    }
    if (auto v = env("FIELDLAB_PORT")) {
        c.port = parse_port(*v);
    }
    if (auto v = env("FIELDLAB_DATA_DIR")) {
        c.data_dir = *v;
    }
    if (auto v = env("FIELDLAB_TIMEOUT_SECONDS")) {
        c.abandon_timeout = parse_timeout(*v);
    }
    if (c.cohorts.empty()) {
        throw_invalid_config("at least one cohort is required");
    }
    return c;
}

double PayoutPolicy::real_payout(double balance) const
{
    if (!(divisor > 0.0)) {
        throw_invalid_config("payout divisor must be positive");
    }
    return std::round(std::max(0.0, balance) / divisor * 100.0) / 100.0;
}

PayoutPolicy payout_policy(const std::string& cohort, ScheduleDesign design)
{
    if (design == ScheduleDesign::FullFactorial) {
        return {50000.0};
    }
    return {cohort == "expo" ? 12000.0 : 23500.0};
}

} // namespace fieldlab::service
