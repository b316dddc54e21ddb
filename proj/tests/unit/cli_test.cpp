#include <csignal>
#include <regex>
#include <sstream>

#include <gtest/gtest.h>
#include <httplib.h>
#include <nlohmann/json.hpp>

#include "test_util.hpp"

namespace {

using nlohmann::json;
using ptfa::test::ChildProcess;
using ptfa::test::read_text;
using ptfa::test::run_process;
using ptfa::test::TempDir;
using ptfa::test::write_text;

const std::string kBin = PTFA_BINARY;
const std::filesystem::path kData = PTFA_TEST_DATA_DIR;

TEST(CliTest, UsageErrors) {
    EXPECT_EQ(run_process({kBin}).exit_code, 2);
    EXPECT_EQ(run_process({kBin, "dance"}).exit_code, 2);
    EXPECT_EQ(run_process({kBin, "simulate"}).exit_code, 2);
    EXPECT_EQ(run_process({kBin, "metrics"}).exit_code, 2);
    EXPECT_EQ(run_process({kBin, "--help"}).exit_code, 0);
}

TEST(CliTest, SimulateBaseline) {
    TempDir dir;
    write_text(dir / "script.jsonl", "");
    const auto r = run_process({kBin, "simulate", (dir / "script.jsonl").string(), "-m", "0", "--virtual", "-o",
                                dir.path().string(), "--session-id", "b1"});
    ASSERT_EQ(r.exit_code, 0) << r.err;
    EXPECT_NE(r.out.find("3 facilitator posts"), std::string::npos) << r.out;
    const auto data = read_text(dir / "session_b1.jsonl");
    std::vector<long> ts;
    std::istringstream in(data);
    for (std::string line; std::getline(in, line);) {
        const auto j = json::parse(line);
        if (j["author_id"] == "FACILITATOR") ts.push_back(j["ts_ms"]);
        EXPECT_TRUE(j["hat"].is_null());
    }
    EXPECT_EQ(ts, (std::vector<long>{0, 600'000, 1'020'000}));
    std::istringstream ticks(read_text(dir / "ticks_b1.jsonl"));
    int n = 0;
    for (std::string line; std::getline(ticks, line);) ++n;
    EXPECT_EQ(n, 41);
}

TEST(CliTest, SimulateIsDeterministic) {
    TempDir dir;
    write_text(dir / "s.jsonl", R"({"offset_ms":1000,"participant":0,"text":"picnic?"}
{"offset_ms":95000,"participant":1,"text":"a film maybe"}
{"offset_ms":700000,"participant":2,"text":"film it is"}
{"llm":"What would make this fun for everyone?"}
{"llm":"Good"}
{"llm":"Pick one and name a time.","hat":"blue"}
)");
    auto run = [&](const std::string& out) {
        const auto r = run_process({kBin, "simulate", (dir / "s.jsonl").string(), "--virtual", "-o", (dir / out).string()});
        EXPECT_EQ(r.exit_code, 0) << r.err;
        return read_text(dir / out / "session_sim.jsonl") + read_text(dir / out / "ticks_sim.jsonl");
    };
    EXPECT_EQ(run("a"), run("b"));
}

TEST(CliTest, SimulateRejectsBadInput) {
    TempDir dir;
    write_text(dir / "bad.jsonl", "{\"offset_ms\":5,\"participant\":0,\"text\":\"ok\"}\n{\"offset_ms\":9,\"participant\":8,\"text\":\"x\"}\n");
    const auto bad = run_process({kBin, "simulate", (dir / "bad.jsonl").string(), "--virtual", "-o", dir.path().string()});
    EXPECT_EQ(bad.exit_code, 1);
    EXPECT_NE(bad.err.find("line 2"), std::string::npos) << bad.err;
    EXPECT_EQ(run_process({kBin, "simulate", (dir / "missing.jsonl").string(), "--virtual"}).exit_code, 2);
    write_text(dir / "ok.jsonl", "");
    EXPECT_EQ(run_process({kBin, "simulate", (dir / "ok.jsonl").string(), "-m", "2"}).exit_code, 2);
    EXPECT_EQ(run_process({kBin, "simulate", (dir / "ok.jsonl").string(), "-t", "2"}).exit_code, 2);
    write_text(dir / "cfg.json", R"({"scheduler":{"tick":1}})");
    const auto cfg = run_process({kBin, "simulate", (dir / "ok.jsonl").string(), "-c", (dir / "cfg.json").string()});
    EXPECT_EQ(cfg.exit_code, 2);
    EXPECT_NE(cfg.err.find("scheduler.tick"), std::string::npos) << cfg.err;
}

TEST(CliTest, MetricsGolden) {
    const auto golden = (kData / "golden_transcript.jsonl").string();
    const auto r = run_process({kBin, "metrics", golden});
    ASSERT_EQ(r.exit_code, 0) << r.err;
    EXPECT_EQ(json::parse(r.out), json::parse(read_text(kData / "golden_metrics.json")));
    const auto table = run_process({kBin, "metrics", golden, "-f", "table"});
    EXPECT_EQ(table.exit_code, 0);
    EXPECT_NE(table.out.find("total_words"), std::string::npos);
    const auto twice = run_process({kBin, "metrics", golden, golden});
    EXPECT_EQ(json::parse(twice.out)["total_words"], 48);
}

TEST(CliTest, MetricsDataErrors) {
    TempDir dir;
    EXPECT_EQ(run_process({kBin, "metrics", (dir / "none.jsonl").string()}).exit_code, 1);
    write_text(dir / "bad.jsonl", "{\"x\":1}\n");
    const auto r = run_process({kBin, "metrics", (dir / "bad.jsonl").string()});
    EXPECT_EQ(r.exit_code, 1);
    EXPECT_NE(r.err.find("line 1"), std::string::npos);
    EXPECT_EQ(run_process({kBin, "metrics", (kData / "golden_transcript.jsonl").string(), "-f", "xml"}).exit_code, 2);
}

std::string serve_config(const TempDir& dir) {
    const auto path = dir / "serve.json";
    write_text(path, json({{"server", {{"port", 0}, {"data_dir", (dir / "data").string()}}},
                           {"provider", {{"kind", "scripted"}, {"script", {"Good"}}}}})
                         .dump());
    return path.string();
}

TEST(CliTest, ServeNeedsAdminToken) {
    TempDir dir;
    const auto r = run_process({kBin, "serve", "-c", serve_config(dir)}, {{"PTFA_ADMIN_TOKEN", ""}});
    EXPECT_EQ(r.exit_code, 3);
    EXPECT_NE(r.err.find("PTFA_ADMIN_TOKEN"), std::string::npos);
}

TEST(CliTest, ServeBadConfig) {
    TempDir dir;
    write_text(dir / "c.json", R"({"server":{"prot":1}})");
    const auto r = run_process({kBin, "serve", "-c", (dir / "c.json").string()}, {{"PTFA_ADMIN_TOKEN", "x"}});
    EXPECT_EQ(r.exit_code, 2);
    EXPECT_NE(r.err.find("server.prot"), std::string::npos);
}

std::optional<int> wait_ready(ChildProcess& child) {
    const auto line = child.read_line(std::chrono::seconds(10));
    if (!line) return std::nullopt;
    std::smatch m;
    static const std::regex re(R"(listening on http://[^:]+:(\d+))");
    if (!std::regex_search(*line, m, re)) return std::nullopt;
    return std::stoi(m[1]);
}

TEST(CliTest, ServeLifecycle) {
    TempDir dir;
    const std::string secret = "sk-never-print-me-123";
    ChildProcess child({kBin, "serve", "-c", serve_config(dir)},
                       {{"PTFA_ADMIN_TOKEN", "tok"}, {"PTFA_API_KEY", secret}});
    const auto port = wait_ready(child);
    ASSERT_TRUE(port);
    httplib::Client http("127.0.0.1", *port);
    auto res = http.Post("/sessions", {{"Authorization", "Bearer tok"}}, R"({"topic_id":0,"model":"1"})",
                         "application/json");
    ASSERT_TRUE(res);
    EXPECT_EQ(res->status, 201);

    // a second server on the same port cannot start
    TempDir other;
    const auto clash = run_process({kBin, "serve", "-c", serve_config(other), "--port", std::to_string(*port)},
                                   {{"PTFA_ADMIN_TOKEN", "tok"}});
    EXPECT_EQ(clash.exit_code, 3);
    EXPECT_NE(clash.err.find("PortInUse"), std::string::npos) << clash.err;

    child.signal(SIGTERM);
    EXPECT_EQ(child.wait(), 0);
    for (const auto& e : std::filesystem::recursive_directory_iterator(dir.path())) {
        if (e.is_regular_file()) EXPECT_EQ(read_text(e.path()).find(secret), std::string::npos);
    }
}

TEST(CliTest, ApiKeyNeverLogged) {
    TempDir dir;
    const std::string secret = "sk-very-secret-456";
    const auto cfg = dir / "http.json";
    write_text(cfg, json({{"server", {{"port", 0}, {"data_dir", (dir / "data").string()}}},
                          {"provider", {{"kind", "http"}, {"base_url", "http://127.0.0.1:9/v1"}, {"model", "m"}}}})
                        .dump());
    ChildProcess child({kBin, "serve", "-c", cfg.string()}, {{"PTFA_ADMIN_TOKEN", "tok"}, {"PTFA_API_KEY", secret}});
    const auto port = wait_ready(child);
    ASSERT_TRUE(port);
    // second instances fail fast on the taken port; their stderr is captured
    const std::vector<std::string> argv{kBin, "serve", "-c", cfg.string(), "--port", std::to_string(*port)};
    const auto with_key = run_process(argv, {{"PTFA_ADMIN_TOKEN", "tok"}, {"PTFA_API_KEY", secret}});
    EXPECT_EQ(with_key.exit_code, 3);
    EXPECT_EQ(with_key.err.find(secret), std::string::npos) << with_key.err;
    EXPECT_EQ(with_key.out.find(secret), std::string::npos);
    const auto without = run_process(argv, {{"PTFA_ADMIN_TOKEN", "tok"}, {"PTFA_API_KEY", ""}});
    EXPECT_NE(without.err.find("PTFA_API_KEY"), std::string::npos) << without.err;
    child.signal(SIGINT);
    EXPECT_EQ(child.wait(), 0);
}

}  // namespace
