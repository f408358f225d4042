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
#include "fieldlab/schedule.h"
#include "fieldlab/service/service_config.h"
#include "fieldlab/service/session_manager.h"
#include "fieldlab/service/session_store.h"
#include "fieldlab/session_log.h"

#include "test_support.h"

#include <gtest/gtest.h>
#include <json.hpp>

#include <atomic>
#include <map>
#include <memory>
#include <sstream>
#include <thread>

#include <csignal>
#include <sys/wait.h>
#include <unistd.h>

using namespace fieldlab;
using namespace fieldlab::service;
using nlohmann::json;

namespace
{

struct Harness {
    testkit::TempDir dir{"fieldlab-service"};
    std::shared_ptr<std::atomic<std::int64_t>> now = std::make_shared<std::atomic<std::int64_t>>(1'000'000);
    ServiceConfig config;
    std::unique_ptr<SessionManager> manager;

    explicit Harness(std::optional<double> rate_override = std::nullopt)
    {
        config.data_dir      = dir / "data";
        config.rate_override = rate_override;
        start();
    }
    void start()
    {
        manager.reset();
        auto clock = now;
        manager    = std::make_unique<SessionManager>(config, [clock] {
            return clock->load();
        });
    }
    void tick(std::int64_t ms = 1000)
    {
        *now += ms;
    }
    json create(const std::string& cohort, const std::string& design, std::optional<std::uint64_t> seed = {})
    {
        json body = {{"cohort", cohort}, {"design", design}};
        if (seed) {
            body["seed"] = *seed;
        }
        return json::parse(manager->create_session(body.dump()));
    }
    json decide(const std::string& id, const std::string& action, std::optional<std::string> token = {})
    {
        tick();
        json body = {{"action", action}};
        if (token) {
            body["token"] = *token;
        }
        return json::parse(manager->submit_decision(id, body.dump()));
    }
};

int error_status(const std::function<void()>& f, std::string* code = nullptr)
{
    try {
        f();
    }
    catch (const ServiceError& e) {
        if (code) {
            *code = e.code();
        }
        return e.status();
    }
    return 0;
}

/// Plays a session to the end; `choose` sees the observation of each month.
std::vector<json> play_out(Harness& h, const std::string& id, const std::function<std::string(const json&)>& choose)
{
    std::vector<json> responses;
    auto state = json::parse(h.manager->state(id));
    auto obs   = state["observation"];
    for (;;) {
        auto r = h.decide(id, choose(obs));
        responses.push_back(r);
        if (r["status"] != "active") {
            break;
        }
        obs = r["observation"];
    }
    return responses;
}

/// Seed whose first round infects a holding player in exactly `month`.
std::uint64_t seed_infected_at(int month)
{
    for (std::uint64_t seed = 0;; ++seed) {
        auto schedule = make_schedule(ScheduleDesign::FullFactorial, seed);
        RoundEngine engine(schedule.rounds[0], CounterRng(schedule.rounds[0].seed).split(0));
        while (!engine.over()) {
            engine.step(Action::Hold);
        }
        if (engine.world().player_infected && engine.world().month == month) {
            return seed;
        }
    }
}

void check_no_leak(const json& obs)
{
    const auto vis       = parse_visibility(obs["visibility"].get<std::string>());
    const bool infection = shows_infection(vis);
    const bool bio       = shows_biosecurity(vis);
    EXPECT_EQ(obs.contains("infected_count"), infection);
    EXPECT_EQ(obs.contains("distribution"), bio);
    ASSERT_EQ(obs["facilities"].size(), 50u);
    for (const auto& f : obs["facilities"]) {
        EXPECT_EQ(f.contains("infected"), infection);
        if (!f["player"].get<bool>()) {
            EXPECT_EQ(f.contains("level"), bio);
        }
    }
}

} // namespace

TEST(TestPayout, ConversionPolicies)
{
    EXPECT_EQ(payout_policy("mturk", ScheduleDesign::FullFactorial).real_payout(480000), 9.60);
    EXPECT_EQ(payout_policy("expo", ScheduleDesign::ConstantRate).real_payout(480000), 40.00);
    EXPECT_EQ(payout_policy("mturk", ScheduleDesign::ConstantRate).real_payout(480000), 20.43);
    EXPECT_EQ(payout_policy("bot", ScheduleDesign::FullFactorial).real_payout(-75000), 0.0);
    EXPECT_THROW(PayoutPolicy{0.0}.real_payout(1), InvalidConfig);
}

TEST(TestServiceConfig, FileAndEnvironment)
{
    testkit::TempDir dir;
    testkit::write_file(dir / "service.conf", "# test\nport = 9090\ndata_dir = store\ntimeout_seconds = 90\n"
                                              "cohorts = expo bot\nseed = 5\nkernel_file = kernel.json\n");
    testkit::write_file(dir / "kernel.json", "{\"distance_scale\": 0.2, \"damping\": [1, 0.5, 0.25, 0.125]}");
    std::map<std::string, std::string> env;
    auto lookup = [&](const std::string& k) -> std::optional<std::string> {
        auto it = env.find(k);
        return it == env.end() ? std::nullopt : std::optional(it->second);
    };
    auto c = load_service_config(dir / "service.conf", lookup);
    EXPECT_EQ(c.port, 9090);
    EXPECT_EQ(c.data_dir, dir / "store");
    EXPECT_EQ(c.abandon_timeout, std::chrono::seconds(90));
    EXPECT_EQ(c.cohorts, (std::vector<std::string>{"expo", "bot"}));
    EXPECT_EQ(c.seed, 5u);
    EXPECT_EQ(c.kernel, TransmissionKernel::geometric(0.2, 0.5));

    env["FIELDLAB_PORT"]            = "7070";
    env["FIELDLAB_DATA_DIR"]        = "/tmp/elsewhere";
    env["FIELDLAB_TIMEOUT_SECONDS"] = "5";
    c = load_service_config(dir / "service.conf", lookup);
    EXPECT_EQ(c.port, 7070);
    EXPECT_EQ(c.data_dir, "/tmp/elsewhere");
    EXPECT_EQ(c.abandon_timeout, std::chrono::seconds(5));

    auto defaults = load_service_config(std::nullopt, [](const std::string&) {
        return std::optional<std::string>();
    });
    EXPECT_EQ(defaults.port, 8080);
    EXPECT_EQ(defaults.abandon_timeout, std::chrono::minutes(30));

    testkit::write_file(dir / "bad.conf", "colour = blue\n");
    EXPECT_THROW(load_service_config(dir / "bad.conf", lookup), InvalidConfig);
    env["FIELDLAB_PORT"] = "70000";
    EXPECT_THROW(load_service_config(std::nullopt, lookup), InvalidConfig);
}

TEST(TestServiceConfig, ShippedConfigLoads)
{
    auto c = load_service_config(std::filesystem::path(FIELDLAB_DATA_DIR) / "service.conf", [](const std::string&) {
        return std::optional<std::string>();
    });
    EXPECT_EQ(c.kernel, default_kernel());
    EXPECT_EQ(c.data_dir, std::filesystem::path(FIELDLAB_DATA_DIR) / "../fieldlab-data");
}

TEST(TestSessionManager, CreateAndFreshSummary)
{
    Harness h;
    auto s = h.create("mturk", "full-factorial", 42);
    EXPECT_EQ(s["session_id"], "mturk-000001");
    EXPECT_EQ(s["status"], "active");
    EXPECT_EQ(s["seed"], 42);
    EXPECT_EQ(s["observation"]["round"], 1);
    EXPECT_EQ(s["observation"]["month"], 1);
    EXPECT_EQ(s["observation"]["rounds"], 32);
    auto summary = json::parse(h.manager->summary("mturk-000001"));
    EXPECT_EQ(summary["balance"], 0.0);
    EXPECT_EQ(summary["payout"]["amount"], 0.0);
    EXPECT_EQ(summary["payout"]["divisor"], 50000.0);
    EXPECT_EQ(h.create("bot", "constant-rate")["session_id"], "bot-000002");
}

TEST(TestSessionManager, RequestErrors)
{
    Harness h;
    std::string code;
    EXPECT_EQ(error_status([&] { h.create("reddit", "full-factorial"); }, &code), 400);
    EXPECT_EQ(code, "unknown-cohort");
    EXPECT_EQ(error_status([&] { h.create("bot", "latin-square"); }, &code), 400);
    EXPECT_EQ(code, "unknown-design");
    EXPECT_EQ(error_status([&] { h.manager->create_session("not json"); }, &code), 400);
    EXPECT_EQ(error_status([&] { h.manager->state("nobody"); }, &code), 404);
    EXPECT_EQ(code, "not-found");
    EXPECT_EQ(error_status([&] { h.manager->summary("nobody"); }), 404);

    auto id = h.create("bot", "full-factorial", 1)["session_id"].get<std::string>();
    EXPECT_EQ(error_status([&] { h.decide(id, "jump"); }, &code), 400);
    EXPECT_EQ(code, "bad-request");
    EXPECT_EQ(error_status([&] { h.manager->submit_decision(id, "{}"); }, &code), 400);
    EXPECT_EQ(error_status([&] { h.manager->submit_decision(id, R"({"action":"hold","month":2})"); }, &code), 409);
    EXPECT_EQ(code, "out-of-sequence");
    EXPECT_EQ(error_status([&] { h.manager->submit_decision(id, R"({"action":"hold","round":3})"); }, &code), 409);
    EXPECT_EQ(error_status([&] { h.manager->submit_decision(id, R"({"action":"hold","round":1,"month":1})"); }), 0);
}

TEST(TestSessionManager, SixHoldsWithoutRisk)
{
    Harness h(0.0);
    auto id = h.create("bot", "full-factorial", 3)["session_id"].get<std::string>();
    json r;
    for (int m = 1; m <= 6; ++m) {
        r = h.decide(id, "hold");
        EXPECT_EQ(r["accepted"]["month"], m);
        EXPECT_EQ(r["round_over"], m == 6);
    }
    EXPECT_EQ(r["round_summary"]["payout"], 15000.0);
    EXPECT_EQ(r["round_summary"]["months_played"], 6);
    EXPECT_EQ(r["balance"], 15000.0);
    EXPECT_EQ(r["observation"]["round"], 2);
    EXPECT_EQ(r["observation"]["month"], 1);
}

TEST(TestSessionManager, InfectionEndsRoundAfterThreeRecords)
{
    Harness h;
    const auto seed = seed_infected_at(3);
    auto id         = h.create("bot", "full-factorial", seed)["session_id"].get<std::string>();
    json r;
    for (int m = 1; m <= 3; ++m) {
        r = h.decide(id, "hold");
    }
    EXPECT_TRUE(r["round_over"].get<bool>());
    EXPECT_TRUE(r["round_summary"]["player_infected"].get<bool>());
    EXPECT_EQ(r["round_summary"]["payout"], -25000.0);
    EXPECT_EQ(r["balance"], -25000.0);
    SessionStore store(h.config.data_dir);
    auto records = store.read_records(id);
    ASSERT_EQ(records.size(), 3u);
    EXPECT_TRUE(records.back().infected_this_month);
    EXPECT_EQ(r["observation"]["round"], 2);
}

TEST(TestSessionManager, DuplicateTokenIsIdempotent)
{
    Harness h;
    auto id = h.create("bot", "full-factorial", 9)["session_id"].get<std::string>();
    auto first  = h.manager->submit_decision(id, R"({"action":"upgrade","token":"t-1"})");
    auto second = h.manager->submit_decision(id, R"({"action":"upgrade","token":"t-1"})");
    EXPECT_EQ(first, second);
    SessionStore store(h.config.data_dir);
    EXPECT_EQ(store.read_records(id).size(), 1u);
    auto next = json::parse(h.manager->submit_decision(id, R"({"action":"hold","token":"t-2"})"));
    EXPECT_EQ(next["accepted"]["month"], 2);
    EXPECT_EQ(store.read_records(id).size(), 2u);
    EXPECT_EQ(store.read_records(id)[0].token, "t-1");
}

TEST(TestSessionManager, FullSessionPayoutAndInactiveError)
{
    Harness h(0.0);
    auto id = h.create("mturk", "full-factorial", 4)["session_id"].get<std::string>();
    auto responses = play_out(h, id, [](const json&) { return std::string("hold"); });
    EXPECT_EQ(responses.size(), 192u);
    EXPECT_EQ(responses.back()["status"], "complete");
    EXPECT_FALSE(responses.back().contains("observation"));
    auto summary = json::parse(h.manager->summary(id));
    EXPECT_EQ(summary["balance"], 480000.0);
    EXPECT_EQ(summary["rounds_completed"], 32);
    EXPECT_EQ(summary["payout"]["amount"], 9.60);
    std::string code;
    EXPECT_EQ(error_status([&] { h.decide(id, "hold"); }, &code), 409);
    EXPECT_EQ(code, "session-inactive");

    auto expo = h.create("expo", "constant-rate", 4)["session_id"].get<std::string>();
    play_out(h, expo, [](const json&) { return std::string("hold"); });
    EXPECT_EQ(json::parse(h.manager->summary(expo))["payout"]["amount"], 40.00);
}

TEST(TestSessionManager, BalanceMatchesLog)
{
    Harness h;
    auto id = h.create("bot", "full-factorial", 12)["session_id"].get<std::string>();
    int month = 0;
    play_out(h, id, [&](const json&) {
        return ++month % 3 == 0 ? std::string("upgrade") : std::string("hold");
    });
    auto summary = json::parse(h.manager->summary(id));
    SessionStore store(h.config.data_dir);
    auto sessions = group_sessions(store.read_records(id));
    ASSERT_EQ(sessions.size(), 1u);
    double sum = 0.0;
    for (const auto& p : summary["round_payouts"]) {
        sum += p.get<double>();
    }
    EXPECT_EQ(summary["balance"].get<double>(), sum);
    EXPECT_EQ(sessions[0].balance(), sum);
    EXPECT_EQ(sessions[0].round_payouts(), summary["round_payouts"].get<std::vector<double>>());
}

TEST(TestSessionManager, NoHiddenFieldInAnyResponse)
{
    Harness h;
    auto created = h.create("bot", "full-factorial", 77);
    const auto id = created["session_id"].get<std::string>();
    check_no_leak(created["observation"]);
    std::set<std::string> seen;
    auto responses = play_out(h, id, [&](const json& obs) {
        check_no_leak(obs);
        seen.insert(obs["visibility"].get<std::string>());
        auto state = json::parse(h.manager->state(id));
        check_no_leak(state["observation"]);
        return obs["month"].get<int>() % 2 == 0 ? std::string("upgrade") : std::string("hold");
    });
    EXPECT_EQ(seen.size(), 4u);
    // the exported log nulls the same fields
    auto exported = h.manager->export_logs({});
    std::istringstream in(exported);
    for (const auto& r : read_decision_log(in).records) {
        EXPECT_EQ(r.visible_infected.has_value(), shows_infection(r.visibility));
    }
}

TEST(TestSessionManager, ScheduleIntegrityOfCompletedSession)
{
    Harness h;
    auto id = h.create("bot", "full-factorial", 31)["session_id"].get<std::string>();
    play_out(h, id, [](const json&) { return std::string("upgrade"); });
    SessionStore store(h.config.data_dir);
    std::map<std::tuple<double, std::string, std::string>, std::set<int>> rounds;
    for (const auto& r : store.read_records(id)) {
        rounds[{r.infection_rate, std::string(to_string(r.distribution)), std::string(to_string(r.visibility))}].insert(
            r.round);
    }
    EXPECT_EQ(rounds.size(), 16u);
    for (const auto& [t, rs] : rounds) {
        EXPECT_EQ(rs.size(), 2u);
    }
}

TEST(TestSessionManager, AbandonmentAfterTimeout)
{
    Harness h;
    auto id = h.create("bot", "full-factorial", 1)["session_id"].get<std::string>();
    h.decide(id, "hold");
    auto other = h.create("bot", "full-factorial", 2)["session_id"].get<std::string>();
    h.decide(other, "hold");
    h.tick(29 * 60 * 1000);
    h.decide(other, "hold");
    h.tick(2 * 60 * 1000);
    EXPECT_EQ(h.manager->sweep_abandoned(), 1);
    EXPECT_EQ(json::parse(h.manager->state(id))["status"], "abandoned");
    EXPECT_EQ(json::parse(h.manager->state(other))["status"], "active");
    std::string code;
    EXPECT_EQ(error_status([&] { h.decide(id, "hold"); }, &code), 409);
    EXPECT_EQ(code, "session-inactive");

    std::istringstream in(h.manager->export_logs({}));
    auto visible = read_decision_log(in).records;
    EXPECT_EQ(visible.size(), 2u);
    ExportFilter all;
    all.include_abandoned = true;
    std::istringstream in_all(h.manager->export_logs(all));
    EXPECT_EQ(read_decision_log(in_all).records.size(), 3u);

    // the status survives a restart
    h.start();
    EXPECT_EQ(json::parse(h.manager->state(id))["status"], "abandoned");
}

TEST(TestSessionManager, ExportFiltersAndFormats)
{
    Harness h(0.0);
    EXPECT_EQ(h.manager->export_logs({}), encode_header(LogHeader{}) + "\n");
    auto a = h.create("expo", "constant-rate", 1)["session_id"].get<std::string>();
    auto b = h.create("mturk", "full-factorial", 2)["session_id"].get<std::string>();
    h.decide(a, "hold");
    const auto t_mid = h.now->load();
    h.decide(b, "hold");
    h.decide(a, "upgrade");

    ExportFilter expo;
    expo.cohort = "expo";
    std::istringstream in(h.manager->export_logs(expo));
    auto recs = read_decision_log(in).records;
    ASSERT_EQ(recs.size(), 2u);
    for (const auto& r : recs) {
        EXPECT_EQ(r.cohort, "expo");
    }
    ExportFilter ff;
    ff.design = ScheduleDesign::FullFactorial;
    std::istringstream in_ff(h.manager->export_logs(ff));
    EXPECT_EQ(read_decision_log(in_ff).records.size(), 1u);
    ExportFilter window;
    window.to_ms = t_mid;
    std::istringstream in_w(h.manager->export_logs(window));
    EXPECT_EQ(read_decision_log(in_w).records.size(), 1u);

    auto csv = h.manager->export_logs({}, ExportFormat::Csv);
    EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 4);
    EXPECT_EQ(csv.rfind("session_id,cohort,design,round,month", 0), 0u);

    // byte-identical re-export, also after ingesting
    auto first = h.manager->export_logs({});
    EXPECT_EQ(first, h.manager->export_logs({}));
    std::istringstream again(first);
    auto file = read_decision_log(again);
    std::ostringstream out;
    write_decision_log(out, file.records, file.header);
    EXPECT_EQ(out.str(), first);
}

TEST(TestSessionManager, FiftyBotsWithoutRiskLogNineThousandSix)
{
    Harness h(0.0);
    for (int i = 0; i < 50; ++i) {
        auto id = h.create("expo", "constant-rate")["session_id"].get<std::string>();
        play_out(h, id, [](const json&) { return std::string("hold"); });
    }
    std::istringstream in(h.manager->export_logs({}));
    EXPECT_EQ(read_decision_log(in).records.size(), 9600u);
}

TEST(TestSessionManager, ConcurrentSessions)
{
    Harness h(0.0);
    std::vector<std::string> ids;
    for (int i = 0; i < 4; ++i) {
        ids.push_back(h.create("bot", "constant-rate")["session_id"].get<std::string>());
    }
    std::vector<std::thread> threads;
    for (const auto& id : ids) {
        threads.emplace_back([&h, id] {
            for (int m = 0; m < 60; ++m) {
                h.manager->submit_decision(id, R"({"action":"hold"})");
            }
        });
    }
    std::thread exporter([&h] {
        for (int i = 0; i < 10; ++i) {
            std::istringstream in(h.manager->export_logs({}));
            read_decision_log(in);
        }
    });
    for (auto& t : threads) {
        t.join();
    }
    exporter.join();
    for (const auto& id : ids) {
        EXPECT_EQ(json::parse(h.manager->summary(id))["rounds_completed"], 10);
    }
}

TEST(TestSessionManager, RestartReplaysState)
{
    Harness h;
    auto id = h.create("bot", "full-factorial", 55)["session_id"].get<std::string>();
    std::string with_token;
    for (int i = 0; i < 20; ++i) {
        auto body = json{{"action", i % 4 == 0 ? "upgrade" : "hold"}, {"token", "k" + std::to_string(i)}};
        h.tick();
        with_token = h.manager->submit_decision(id, body.dump());
    }
    const auto before_state   = h.manager->state(id);
    const auto before_summary = h.manager->summary(id);
    const auto before_export  = h.manager->export_logs({});
    h.start();
    EXPECT_EQ(h.manager->state(id), before_state);
    EXPECT_EQ(h.manager->summary(id), before_summary);
    EXPECT_EQ(h.manager->export_logs({}), before_export);
    // old tokens still answer from the log
    EXPECT_EQ(h.manager->submit_decision(id, R"({"action":"upgrade","token":"k19"})"), with_token);
    // new sessions continue the id sequence
    EXPECT_EQ(h.create("bot", "full-factorial")["session_id"], "bot-000002");
}

TEST(TestSessionStore, TornTrailingLineIsDropped)
{
    Harness h;
    auto id = h.create("bot", "full-factorial", 5)["session_id"].get<std::string>();
    h.decide(id, "hold");
    h.decide(id, "hold");
    const auto path = h.config.data_dir / "sessions" / (id + ".ndjson");
    auto text       = testkit::read_file(path);
    testkit::write_file(path, text + "{\"session_id\":\"" + id + "\",\"coh");
    h.start();
    SessionStore store(h.config.data_dir);
    EXPECT_EQ(store.read_records(id).size(), 2u);
    EXPECT_EQ(testkit::read_file(path), text);
    EXPECT_EQ(h.decide(id, "hold")["accepted"]["month"], 3);
}

TEST(TestSessionStore, TamperedLogIsRejected)
{
    Harness h;
    auto id = h.create("bot", "full-factorial", 5)["session_id"].get<std::string>();
    h.decide(id, "hold");
    const auto path = h.config.data_dir / "sessions" / (id + ".ndjson");
    auto text       = testkit::read_file(path);
    auto pos        = text.find("\"action\":\"hold\"");
    ASSERT_NE(pos, std::string::npos);
    text.replace(pos, 15, "\"action\":\"upgrade\"");
    testkit::write_file(path, text);
    EXPECT_THROW(h.start(), DataError);
}

TEST(TestSessionStore, RejectsUnsafeIds)
{
    testkit::TempDir dir;
    SessionStore store(dir.path());
    SessionMeta meta;
    meta.session_id = "../escape";
    EXPECT_THROW(store.create(meta), Error);
    meta.session_id = "ok-id_1";
    EXPECT_NO_THROW(store.create(meta));
    EXPECT_EQ(store.load_index().size(), 1u);
}

TEST(TestDurability, KilledProcessKeepsAcknowledgedDecisions)
{
    testkit::TempDir dir;
    ServiceConfig config;
    config.data_dir = dir / "data";
    for (int attempt = 0; attempt < 3; ++attempt) {
        int fds[2];
        ASSERT_EQ(::pipe(fds), 0);
        const pid_t pid = ::fork();
        ASSERT_GE(pid, 0);
        if (pid == 0) {
            ::close(fds[0]);
            SessionManager manager(config);
            const auto id = json::parse(manager.create_session(R"({"cohort":"bot","design":"full-factorial"})"))
                                ["session_id"].get<std::string>();
            for (int i = 0;; ++i) {
                auto body = json{{"action", i % 3 == 0 ? "upgrade" : "hold"}, {"token", "a" + std::to_string(i)}};
                auto r    = json::parse(manager.submit_decision(id, body.dump()));
                auto ack  = r["accepted"].dump() + "|" + id + "\n";
                if (::write(fds[1], ack.data(), ack.size()) < 0 || r["status"] != "active") {
                    break;
                }
            }
            ::_exit(0);
        }
        ::close(fds[1]);
        // let it acknowledge a few decisions, then kill it mid-stream
        std::string acks;
        char buf[4096];
        while (std::count(acks.begin(), acks.end(), '\n') < 5 + 7 * attempt) {
            auto n = ::read(fds[0], buf, sizeof buf);
            if (n <= 0) {
                break;
            }
            acks.append(buf, static_cast<std::size_t>(n));
        }
        ::kill(pid, SIGKILL);
        for (;;) {
            auto n = ::read(fds[0], buf, sizeof buf);
            if (n <= 0) {
                break;
            }
            acks.append(buf, static_cast<std::size_t>(n));
        }
        ::close(fds[0]);
        int status = 0;
        ::waitpid(pid, &status, 0);

        std::vector<std::pair<std::string, std::string>> acked;
        std::istringstream lines(acks);
        for (std::string line; std::getline(lines, line);) {
            auto bar = line.find('|');
            acked.emplace_back(line.substr(bar + 1), line.substr(0, bar));
        }
        ASSERT_FALSE(acked.empty());
        SessionManager recovered(config);
        SessionStore store(config.data_dir);
        auto records = store.read_records(acked.front().first);
        ASSERT_GE(records.size(), acked.size());
        for (std::size_t i = 0; i < acked.size(); ++i) {
            auto a = json::parse(acked[i].second);
            EXPECT_EQ(records[i].round, a["round"].get<int>());
            EXPECT_EQ(records[i].month, a["month"].get<int>());
            EXPECT_EQ(to_string(records[i].action), a["action"].get<std::string>());
        }
    }
}
