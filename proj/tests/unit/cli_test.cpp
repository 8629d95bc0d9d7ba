// Copyright (C) 2026 The BlackMirror Authors
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <fstream>
#include <sstream>

#include "blackmirror/cli.hpp"
#include "test_support.hpp"

using namespace blackmirror;
namespace fs = std::filesystem;

namespace {

struct CliResult {
    int code;
    std::string out;
    std::string err;
};

class CliTest : public ::testing::Test {
protected:
    CliResult run(std::vector<std::string> args, bool with_dirs = true) {
        if (with_dirs) {
            for (const auto& [flag, sub] : {std::pair{"--state-dir", "state"}, std::pair{"--cache-dir", "cache"}}) {
                args.push_back(flag);
                args.push_back((dir_.path() / sub).string());
            }
        }
        std::ostringstream out, err;
        const int code = cli::run(args, out, err);
        return {code, out.str(), err.str()};
    }

    json manifest(const std::string& run_id) {
        std::ifstream in(dir_.path() / "state" / "runs" / run_id / "manifest.json");
        return json::parse(in);
    }

    bmtest::TempDir dir_;
};

}  // namespace

TEST_F(CliTest, BenignPromptExitsZero) {
    const auto r = run({"detect", "a dog near a bench"});
    EXPECT_EQ(r.code, cli::kExitBenign) << r.err;
    const auto doc = json::parse(r.out);
    EXPECT_EQ(doc["schema"], "blackmirror/v1");
    EXPECT_FALSE(doc["backdoor_flag"].get<bool>());
    EXPECT_FALSE(doc.contains("timing_ms"));
}

TEST_F(CliTest, TriggeredPromptExitsTen) {
    const auto r = run({"detect", "zz a dog near a bench", "--run-id", "t1"});
    EXPECT_EQ(r.code, cli::kExitFlagged) << r.err;
    const auto doc = json::parse(r.out);
    EXPECT_TRUE(doc["branches"][0]["triggered"].get<bool>());
    EXPECT_EQ(doc["branches"][0]["branch"], "object");
    const auto m = manifest("t1");
    EXPECT_EQ(m["run_id"], "t1");
    EXPECT_EQ(m["exit_code"], 10);
    EXPECT_EQ(m["cache_mode"], "live");
}

TEST_F(CliTest, ColdReplayExitsTwenty) {
    const auto r = run({"detect", "a dog", "--cache", "replay"});
    EXPECT_EQ(r.code, cli::kExitIncomplete);
    const auto doc = json::parse(r.out);
    EXPECT_EQ(doc["status"], "incomplete");
    EXPECT_NE(doc["failure"]["detail"].get<std::string>().find("replay cache miss"), std::string::npos);
}

TEST_F(CliTest, UsageErrorsExitTwo) {
    EXPECT_EQ(run({"detect"}).code, cli::kExitUsage);
    EXPECT_EQ(run({"detect", "a dog", "--bogus"}).code, cli::kExitUsage);
    EXPECT_EQ(run({"detect", "a dog", "--backend", "carrier-pigeon"}).code, cli::kExitUsage);
    EXPECT_EQ(run({"detect", "   "}).code, cli::kExitUsage);
    EXPECT_EQ(run({"detect", "a dog", "--tau", "1.5"}).code, cli::kExitUsage);
    EXPECT_EQ(run({"detect", "a dog", "--backend", "http"}).code, cli::kExitUsage);
    EXPECT_EQ(run({}, false).code, cli::kExitUsage);
}

TEST_F(CliTest, RunIdsAreUnique) {
    EXPECT_NE(cli::new_run_id(), cli::new_run_id());
    EXPECT_EQ(run({"detect", "a dog", "--run-id", "dup"}).code, cli::kExitBenign);
    EXPECT_EQ(run({"detect", "a dog", "--run-id", "dup"}).code, cli::kExitUsage);
}

TEST_F(CliTest, RecordThenReplayIsBitIdentical) {
    const auto rec = run({"record", "zz a dog near a bench", "--run-id", "rec"});
    ASSERT_EQ(rec.code, cli::kExitFlagged) << rec.err;
    const auto rep = run({"replay", "rec"});
    EXPECT_EQ(rep.code, cli::kExitFlagged) << rep.err;
    EXPECT_EQ(rep.out, rec.out);
    const auto other = run({"replay", "rec", "--prompt", "a cat on a sofa"});
    EXPECT_EQ(other.code, cli::kExitIncomplete);
}

TEST_F(CliTest, FlagsOverrideConfigFile) {
    const auto cfg_path = dir_.path() / "cfg.json";
    std::ofstream(cfg_path) << R"({"N": 3, "K": 3, "tau": 0.99, "sim": {"noiseless": true}})";
    const auto r = run({"detect", "a dog", "--config", cfg_path.string(), "--n", "4", "--run-id", "p"});
    ASSERT_EQ(r.code, cli::kExitBenign) << r.err;
    const auto m = manifest("p");
    EXPECT_EQ(m["config"]["N"], 4);
    EXPECT_EQ(m["config"]["K"], 3);
    EXPECT_EQ(m["config"]["tau"], 0.99);
    EXPECT_EQ(m["config"]["sim"]["bias_probability"], 0.0);
}

TEST_F(CliTest, UnknownConfigKeyIsUsageError) {
    const auto cfg_path = dir_.path() / "bad.json";
    std::ofstream(cfg_path) << R"({"N": 3, "temprature": 0.2})";
    EXPECT_EQ(run({"detect", "a dog", "--config", cfg_path.string()}).code, cli::kExitUsage);
}

TEST_F(CliTest, TauSweepWritesFiveRowsPerVariant) {
    const auto reports = (dir_.path() / "reports").string();
    const auto r = run({"eval", "--sweep", "tau", "--samples", "8", "--run-id", "sw", "--reports-dir", reports});
    ASSERT_EQ(r.code, cli::kExitBenign) << r.err;
    for (const char* v : {"blackmirror", "blackmirror-no-verify", "ufid", "clipd"}) {
        std::ifstream in(fs::path(reports) / "sw" / (std::string("metrics_") + v + ".csv"));
        ASSERT_TRUE(in) << v;
        std::vector<std::string> rows;
        for (std::string line; std::getline(in, line);) rows.push_back(line);
        ASSERT_EQ(rows.size(), 6u) << v;
        EXPECT_NE(rows[1].find(",tau,0.5,"), std::string::npos);
        EXPECT_NE(rows[5].find(",tau,0.9999,"), std::string::npos);
    }
}
