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
#include "fieldlab/pipeline.h"
#include "fieldlab/policy.h"
#include "fieldlab/service/http_api.h"
#include "fieldlab/service/session_manager.h"

#include <CLI11.hpp>
#include <fmt/format.h>

#include <csignal>
#include <iostream>
#include <fstream>
#include <thread>

namespace
{

using namespace fieldlab;

enum Exit
{
    exit_ok            = 0,
    exit_usage         = 1,
    exit_data          = 2,
    exit_nonconforming = 3,
};

struct CalibrateArgs {
    std::string targets;
    std::string out = "kernel.json";
    std::string csv;
    long trials        = 4000;
    long verify_trials = 0;
    std::uint64_t seed = 20190301;
    int max_evaluations = 250;
    std::string form   = "level-table";
    std::vector<double> rank_rates = {0.3};
    bool no_ranking = false;
};

int run_calibrate(const CalibrateArgs& a)
{
    const auto targets = a.targets.empty() ? published_targets() : load_targets(a.targets);
    CalibrationOptions options;
    options.trials          = a.trials;
    options.seed            = a.seed;
    options.max_evaluations = a.max_evaluations;
    options.form            = a.form == "geometric" ? KernelForm::Geometric : KernelForm::LevelTable;
    if (!a.no_ranking) {
        options.ranked_rates = a.rank_rates;
    }
    auto result = calibrate_kernel(targets, options);
    write_calibration_table(std::cout, result);
    write_kernel_file(a.out, result.kernel);
    std::cout << fmt::format("kernel written to {}\n", a.out);

    if (a.verify_trials > 0) {
        // fresh seed, so the check is not scored on the fitting draws
        result.cells     = evaluate_kernel(result.kernel, targets, a.verify_trials, substream_key(a.seed, 1));
        result.max_error = max_abs_error(result.cells);
        result.trials    = a.verify_trials;
        result.ranking_preserved = true;
        for (double r : options.ranked_rates) {
            result.ranking_preserved = result.ranking_preserved && ranking_shortfall(result.cells, r, 0.0) <= 0.0;
        }
        result.conforming = result.max_error <= options.tolerance && result.ranking_preserved;
        std::cout << fmt::format("verification at {} trials per cell:\n", a.verify_trials);
        write_calibration_table(std::cout, result);
    }
    if (!a.csv.empty()) {
        std::ofstream out(a.csv);
        if (!out) {
            throw DataError(fmt::format("cannot write {}", a.csv));
        }
        write_calibration_csv(out, result.cells);
    }
    if (!result.conforming) {
        std::cerr << fmt::format("calibration is non-conforming: max error {:.4f}, ranking {}\n", result.max_error,
                                 result.ranking_preserved ? "preserved" : "broken");
        return exit_nonconforming;
    }
    return exit_ok;
}

struct CohortArgs {
    std::string spec;
    std::string out = "logs";
    std::string kernel;
    std::optional<std::uint64_t> seed;
};

int run_cohort(const CohortArgs& a)
{
    auto spec = load_cohort_spec(a.spec);
    if (!a.kernel.empty()) {
        spec.kernel = read_kernel_file(a.kernel);
    }
    if (a.seed) {
        spec.seed = *a.seed;
    }
    if (spec.total() == 0) {
        std::cout << "empty cohort spec, nothing written\n";
        return exit_ok;
    }
    const auto sessions = synth_cohort(spec);
    std::filesystem::create_directories(a.out);
    long decisions = 0;
    for (const auto& s : sessions) {
        write_session_file(std::filesystem::path(a.out) / (s.session_id + ".ndjson"), s);
        decisions += static_cast<long>(s.records.size());
    }
    std::cout << fmt::format("{} sessions, {} decisions written to {}\n", sessions.size(), decisions, a.out);
    return exit_ok;
}

struct AnalyzeArgs {
    std::string logs;
    std::string out = "report";
    Exp1Options options;
    std::string normalization = "per-category";
};

int run_analyze(AnalyzeArgs a)
{
    a.options.normalization =
        a.normalization == "per-month" ? HistogramNormalization::PerMonth : HistogramNormalization::PerCategory;
    const auto sessions = load_session_dir(a.logs);
    const auto report   = analyze_exp1(sessions, a.options);
    write_exp1_bundle(report, a.out);
    std::cout << render_exp1_summary(report);
    return exit_ok;
}

struct CompareArgs {
    std::string logs_a;
    std::string logs_b;
    std::string out = "comparison";
    std::string name_a;
    std::string name_b;
};

int run_compare(const CompareArgs& a)
{
    const auto sa     = load_session_dir(a.logs_a);
    const auto sb     = load_session_dir(a.logs_b);
    auto name         = [](const std::string& given, const std::string& dir) {
        return given.empty() ? std::filesystem::path(dir).filename().string() : given;
    };
    const auto report = compare_cohorts(sa, sb, name(a.name_a, a.logs_a), name(a.name_b, a.logs_b));
    write_comparison_bundle(report, a.out);
    std::cout << render_comparison_summary(report);
    return exit_ok;
}

struct SimulateArgs {
    double rate              = 0.3;
    std::string distribution = "low";
    std::string visibility   = "full";
    std::string policy       = "risk-averse";
    double epsilon           = 0.0;
    int rounds               = 1;
    std::uint64_t seed       = 1;
    std::string kernel;
    std::string out;
};

int run_simulate(const SimulateArgs& a)
{
    PolicySpec policy;
    policy.kind             = parse_policy_kind(a.policy);
    policy.flip_probability = a.epsilon;
    policy.validate();
    RoundConfig config;
    config.infection_rate = a.rate;
    config.distribution   = parse_distribution(a.distribution);
    config.visibility     = parse_visibility(a.visibility);
    if (!a.kernel.empty()) {
        config.kernel = read_kernel_file(a.kernel);
    }
    std::ofstream file;
    if (!a.out.empty()) {
        file.open(a.out);
        if (!file) {
            throw DataError(fmt::format("cannot write {}", a.out));
        }
    }
    std::ostream& out = a.out.empty() ? std::cout : file;
    const auto decide = make_policy(policy);
    for (int r = 0; r < a.rounds; ++r) {
        config.seed = substream_key(a.seed, static_cast<std::uint64_t>(r));
        config.validate();
        out << fmt::format("round {}\n", r + 1) << serialize(play_round(config, decide, CounterRng(config.seed)));
    }
    return exit_ok;
}

struct ServeArgs {
    std::string config;
    std::optional<int> port;
    std::string data_dir;
};

int run_serve(const ServeArgs& a)
{
    auto config = service::load_service_config(a.config.empty() ? std::nullopt
                                                                : std::optional<std::filesystem::path>(a.config));
    if (a.port) {
        config.port = *a.port;
    }
    if (!a.data_dir.empty()) {
        config.data_dir = a.data_dir;
    }
    service::SessionManager manager(config);
    service::HttpServer server(manager);

    sigset_t signals;
    sigemptyset(&signals);
    sigaddset(&signals, SIGINT);
    sigaddset(&signals, SIGTERM);
    pthread_sigmask(SIG_BLOCK, &signals, nullptr);

    const int port = server.bind(config.host, config.port);
    std::cout << fmt::format("serving on http://{}:{} with data in {}\n", config.host, port, config.data_dir.string())
              << std::flush;
    std::thread listener([&] {
        server.listen();
    });
    int sig = 0;
    sigwait(&signals, &sig);
    server.stop();
    listener.join();
    return exit_ok;
}

int run_verify(const std::string& dir)
{
    const auto report = verify_bundle(dir);
    for (const auto& c : report.checks) {
        std::cout << fmt::format("{} {}{}\n", c.ok ? "ok  " : "FAIL", c.name, c.detail.empty() ? "" : ": " + c.detail);
    }
    std::cout << fmt::format("{} bundle: {}\n", report.kind, report.ok() ? "verified" : "verification failed");
    return report.ok() ? exit_ok : exit_data;
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"fieldlab: biosecurity game simulation, experiment service and analysis"};
    app.require_subcommand(1);

    CalibrateArgs cal;
    auto* calibrate = app.add_subcommand("calibrate", "Fit the transmission kernel to infection targets");
    calibrate->add_option("targets", cal.targets, "CSV with rate,level,target (default: built-in table)")
        ->check(CLI::ExistingFile);
    calibrate->add_option("--out", cal.out, "Kernel file to write")->capture_default_str();
    calibrate->add_option("--csv", cal.csv, "Also write the cells as CSV");
    calibrate->add_option("--trials", cal.trials, "Trials per cell and evaluation")->capture_default_str();
    calibrate->add_option("--verify-trials", cal.verify_trials, "Re-estimate the cells at this many trials");
    calibrate->add_option("--seed", cal.seed)->capture_default_str();
    calibrate->add_option("--max-evaluations", cal.max_evaluations)->capture_default_str();
    calibrate->add_option("--form", cal.form)->check(CLI::IsMember({"level-table", "geometric"}))->capture_default_str();
    calibrate->add_option("--rank-rate", cal.rank_rates, "Rates whose expected-return ranking must hold")
        ->capture_default_str();
    calibrate->add_flag("--no-ranking", cal.no_ranking, "Fit the probabilities only");

    CohortArgs co;
    auto* cohort = app.add_subcommand("cohort", "Synthesize bot session logs from a cohort spec");
    auto* spec_opt = cohort->add_option("spec", co.spec, "Cohort spec file")->check(CLI::ExistingFile);
    cohort->add_option("--config", co.spec, "Cohort spec file")->excludes(spec_opt)->check(CLI::ExistingFile);
    cohort->add_option("--out", co.out, "Output directory")->capture_default_str();
    cohort->add_option("--kernel", co.kernel, "Kernel file")->check(CLI::ExistingFile);
    cohort->add_option("--seed", co.seed, "Override the spec seed");

    AnalyzeArgs an;
    auto* analyze = app.add_subcommand("analyze-exp1", "Cluster and test full-factorial session logs");
    analyze->add_option("logs", an.logs, "Directory of session logs")->required()->check(CLI::ExistingDirectory);
    analyze->add_option("--out", an.out, "Report bundle directory")->capture_default_str();
    analyze->add_option("--seed", an.options.seed, "k-means seed")->capture_default_str();
    analyze->add_option("--restarts", an.options.restarts)->capture_default_str();
    analyze->add_option("--normalization", an.normalization)
        ->check(CLI::IsMember({"per-category", "per-month"}))
        ->capture_default_str();

    CompareArgs cmp;
    auto* compare = app.add_subcommand("compare-cohorts", "Compare two constant-rate cohorts");
    compare->add_option("logs_a", cmp.logs_a)->required()->check(CLI::ExistingDirectory);
    compare->add_option("logs_b", cmp.logs_b)->required()->check(CLI::ExistingDirectory);
    compare->add_option("--out", cmp.out, "Report bundle directory")->capture_default_str();
    compare->add_option("--name-a", cmp.name_a, "Label of the first cohort (default: directory name)");
    compare->add_option("--name-b", cmp.name_b, "Label of the second cohort (default: directory name)");

    SimulateArgs sim;
    auto* simulate = app.add_subcommand("simulate", "Play ad-hoc rounds with a bot policy");
    simulate->add_option("--rate", sim.rate)->capture_default_str();
    simulate->add_option("--distribution", sim.distribution)->check(CLI::IsMember({"low", "high"}))->capture_default_str();
    simulate->add_option("--visibility", sim.visibility)
        ->check(CLI::IsMember({"full", "infection-hidden", "biosecurity-hidden", "both-hidden"}))
        ->capture_default_str();
    simulate->add_option("--policy", sim.policy)
        ->check(CLI::IsMember({"risk-averse", "risk-tolerant", "opportunistic", "risk-neutral"}))
        ->capture_default_str();
    simulate->add_option("--epsilon", sim.epsilon)->capture_default_str();
    simulate->add_option("--rounds", sim.rounds)->check(CLI::PositiveNumber)->capture_default_str();
    simulate->add_option("--seed", sim.seed)->capture_default_str();
    simulate->add_option("--kernel", sim.kernel)->check(CLI::ExistingFile);
    simulate->add_option("--out", sim.out, "Write to a file instead of stdout");

    ServeArgs srv;
    auto* serve = app.add_subcommand("serve", "Run the experiment service");
    serve->add_option("--config", srv.config, "Service config file")->check(CLI::ExistingFile);
    serve->add_option("--port", srv.port);
    serve->add_option("--data-dir", srv.data_dir);

    std::string bundle;
    auto* verify = app.add_subcommand("verify", "Recompute a report bundle from its tables");
    verify->add_option("bundle", bundle)->required()->check(CLI::ExistingDirectory);

    try {
        app.parse(argc, argv);
    }
    catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? exit_ok : exit_usage;
    }

    try {
        if (*calibrate) {
            return run_calibrate(cal);
        }
        if (*cohort) {
            if (co.spec.empty()) {
                std::cerr << "cohort: a spec file is required\n";
                return exit_usage;
            }
            return run_cohort(co);
        }
        if (*analyze) {
            return run_analyze(an);
        }
        if (*compare) {
            return run_compare(cmp);
        }
        if (*simulate) {
            return run_simulate(sim);
        }
        if (*serve) {
            return run_serve(srv);
        }
        if (*verify) {
            return run_verify(bundle);
        }
    }
    catch (const fieldlab::Error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return exit_data;
    }
    catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return exit_data;
    }
    return exit_usage;
}
