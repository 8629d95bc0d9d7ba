// Copyright (C) 2026 The BlackMirror Authors
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <fstream>
#include <random>
#include <sstream>

#include "blackmirror/error.hpp"
#include "blackmirror/eval_harness.hpp"
#include "blackmirror/labels.hpp"
#include "test_support.hpp"

using namespace blackmirror;
namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

EvalConfig small_eval(std::vector<sim::BackdoorRule> rules) {
    EvalConfig cfg;
    cfg.rules = std::move(rules);
    cfg.n = 12;
    cfg.calibration_n = 8;
    return cfg;
}

}  // namespace

TEST(Dataset, ExactTriggerCount) {
    const auto ds = build_dataset({bmtest::dog_to_cat()}, 200, 0.5, 1);
    EXPECT_EQ(ds.items.size(), 200u);
    EXPECT_EQ(ds.triggered_count(), 100u);
    for (const auto& item : ds.items) {
        EXPECT_EQ(contains_whole_word(item.prompt, "zz"), item.is_triggered) << item.prompt;
        EXPECT_TRUE(contains_whole_word(item.prompt, "dog")) << item.prompt;
        EXPECT_FALSE(contains_whole_word(item.prompt, "tree")) << item.prompt;
    }
    EXPECT_EQ(build_dataset({bmtest::dog_to_cat()}, 7, 0.5, 1).triggered_count(), 4u);
}

TEST(Dataset, AllBenignAndDeterministic) {
    EXPECT_EQ(build_dataset({bmtest::dog_to_cat()}, 30, 0.0, 5).triggered_count(), 0u);
    const auto a = build_dataset({bmtest::dog_to_cat()}, 30, 0.5, 5);
    const auto b = build_dataset({bmtest::dog_to_cat()}, 30, 0.5, 5);
    for (std::size_t i = 0; i < a.items.size(); ++i) {
        EXPECT_EQ(a.items[i].prompt, b.items[i].prompt);
        EXPECT_EQ(a.items[i].is_triggered, b.items[i].is_triggered);
    }
    const auto c = build_dataset({bmtest::dog_to_cat()}, 30, 0.5, 6);
    bool differs = false;
    for (std::size_t i = 0; i < a.items.size(); ++i) differs = differs || a.items[i].prompt != c.items[i].prompt;
    EXPECT_TRUE(differs);
}

TEST(Dataset, Preconditions) {
    EXPECT_THROW(build_dataset({bmtest::dog_to_cat()}, 1, 0.5, 0), InvalidArgument);
    EXPECT_THROW(build_dataset({bmtest::dog_to_cat()}, 10, 1.5, 0), InvalidArgument);
    EXPECT_THROW(build_dataset({}, 10, 0.5, 0), InvalidArgument);
}

TEST(Dataset, ResidualObjectCount) {
    DatasetOptions opts;
    opts.min_objects = 3;
    opts.max_objects = 3;
    const auto ds = build_dataset({bmtest::dog_to_cat()}, 20, 0.5, 2, opts);
    for (const auto& item : ds.items) {
        EXPECT_EQ(sim::parse_prompt(item.prompt).objects.size(), 4u) << item.prompt;
    }
}

TEST(Metrics, HandArithmetic) {
    std::vector<bool> v, l;
    auto push = [&](bool verdict, bool label, int times) {
        for (int i = 0; i < times; ++i) {
            v.push_back(verdict);
            l.push_back(label);
        }
    };
    push(true, true, 3);
    push(true, false, 1);
    push(false, true, 1);
    push(false, false, 5);
    const auto m = compute_metrics(v, l);
    EXPECT_DOUBLE_EQ(m.precision, 0.75);
    EXPECT_DOUBLE_EQ(m.recall, 0.75);
    EXPECT_DOUBLE_EQ(m.f1, 0.75);
    EXPECT_NEAR(m.fpr, 1.0 / 6.0, 1e-12);
}

TEST(Metrics, GuardedDivisions) {
    const auto perfect = compute_metrics({true, false, true}, {true, false, true});
    EXPECT_EQ(perfect.precision, 1.0);
    EXPECT_EQ(perfect.recall, 1.0);
    EXPECT_EQ(perfect.f1, 1.0);
    EXPECT_EQ(perfect.fpr, 0.0);
    const auto none = compute_metrics({false, false}, {true, true});
    EXPECT_EQ(none.precision, 0.0);
    EXPECT_EQ(none.recall, 0.0);
    EXPECT_EQ(none.f1, 0.0);
    EXPECT_EQ(none.fpr, 0.0);
    EXPECT_THROW(compute_metrics({true}, {true, false}), InvalidArgument);
    EXPECT_THROW(compute_metrics({}, {}), InvalidArgument);
}

TEST(Metrics, RecountProperty) {
    std::mt19937_64 rng(3);
    for (int trial = 0; trial < 200; ++trial) {
        const std::size_t n = 1 + rng() % 50;
        std::vector<bool> v(n), l(n);
        std::size_t tp = 0, fp = 0, fn = 0, tn = 0;
        for (std::size_t i = 0; i < n; ++i) {
            v[i] = rng() & 1;
            l[i] = rng() & 1;
            tp += v[i] && l[i];
            fp += v[i] && !l[i];
            fn += !v[i] && l[i];
            tn += !v[i] && !l[i];
        }
        const auto m = compute_metrics(v, l);
        ASSERT_EQ(m.tp, tp);
        ASSERT_EQ(m.fp, fp);
        ASSERT_EQ(m.fn, fn);
        ASSERT_EQ(m.tn, tn);
        const double p = tp + fp ? double(tp) / double(tp + fp) : 0.0;
        const double r = tp + fn ? double(tp) / double(tp + fn) : 0.0;
        ASSERT_NEAR(m.precision, p, 1e-12);
        ASSERT_NEAR(m.recall, r, 1e-12);
        ASSERT_NEAR(m.f1, p + r > 0 ? 2 * p * r / (p + r) : 0.0, 1e-12);
        ASSERT_NEAR(m.fpr, fp + tn ? double(fp) / double(fp + tn) : 0.0, 1e-12);
    }
}

TEST(Variants, NamesRoundTrip) {
    for (auto v : all_detector_variants()) EXPECT_EQ(detector_variant_from_string(to_string(v)), v);
    EXPECT_THROW(detector_variant_from_string("oracle"), InvalidArgument);
    EXPECT_EQ(sweep_axis_from_string("tau"), SweepAxis::Tau);
    EXPECT_EQ(sweep_points(SweepAxis::Tau, DetectionConfig{}).size(), 5u);
}

TEST(RunEvaluation, NoiselessObjectReplacementIsPerfect) {
    bmtest::TempDir dir;
    bmtest::SimRig rig(sim::SimConfig::noiseless({bmtest::dog_to_cat()}));
    const auto summary = run_evaluation(*rig.gateway, small_eval({bmtest::dog_to_cat()}), dir.path());
    ASSERT_EQ(summary.cells.size(), 4u);
    const auto& bm = summary.cells[0].metrics;
    EXPECT_EQ(bm.precision, 1.0);
    EXPECT_EQ(bm.recall, 1.0);
    EXPECT_EQ(bm.fpr, 0.0);
    for (const char* f : {"metrics.json", "metrics.csv", "evidence.jsonl", "config.lock.json",
                          "metrics_blackmirror.csv", "metrics_blackmirror-no-verify.csv",
                          "metrics_ufid.csv", "metrics_clipd.csv"}) {
        EXPECT_TRUE(fs::exists(dir.path() / f)) << f;
    }
}

TEST(RunEvaluation, ResumeChangesNoByte) {
    bmtest::TempDir a, b;
    const auto cfg = small_eval({bmtest::dog_to_cat()});
    {
        bmtest::SimRig rig(sim::SimConfig{.rules = {bmtest::dog_to_cat()}});
        run_evaluation(*rig.gateway, cfg, a.path());
    }
    // Simulate an interruption: keep the lock and half of the evidence.
    fs::copy_file(a.path() / "config.lock.json", b.path() / "config.lock.json");
    const auto evidence = slurp(a.path() / "evidence.jsonl");
    std::istringstream lines(evidence);
    std::string partial, line;
    for (int i = 0; i < 17 && std::getline(lines, line); ++i) partial += line + "\n";
    partial += "{\"torn";
    std::ofstream(b.path() / "evidence.jsonl", std::ios::binary) << partial;

    bmtest::SimRig rig(sim::SimConfig{.rules = {bmtest::dog_to_cat()}});
    const auto summary = run_evaluation(*rig.gateway, cfg, b.path());
    EXPECT_EQ(summary.resumed_samples, 17u);
    for (const char* f : {"metrics.json", "metrics.csv", "evidence.jsonl", "config.lock.json"}) {
        EXPECT_EQ(slurp(a.path() / f), slurp(b.path() / f)) << f;
    }
    // A completed run resumes to the same bytes too.
    bmtest::SimRig again(sim::SimConfig{.rules = {bmtest::dog_to_cat()}});
    EXPECT_EQ(run_evaluation(*again.gateway, cfg, b.path()).resumed_samples, 48u);
    EXPECT_EQ(slurp(a.path() / "metrics.csv"), slurp(b.path() / "metrics.csv"));
}

TEST(RunEvaluation, RefusesForeignCheckpoint) {
    bmtest::TempDir dir;
    bmtest::SimRig rig(sim::SimConfig::noiseless({bmtest::dog_to_cat()}));
    auto cfg = small_eval({bmtest::dog_to_cat()});
    cfg.variants = {DetectorVariant::CLIPD};
    run_evaluation(*rig.gateway, cfg, dir.path());
    cfg.n = 14;
    EXPECT_THROW(run_evaluation(*rig.gateway, cfg, dir.path()), InvalidArgument);
}

TEST(RunEvaluation, UnavailableBackendAbortsWithCheckpoint) {
    bmtest::TempDir dir;
    auto sim_backend = std::make_shared<sim::SimBackend>(sim::SimConfig::noiseless({bmtest::dog_to_cat()}));
    std::atomic<int> budget{40};
    auto flaky = std::make_shared<bmtest::FakeTransport>([&](const std::string& p, const json& body) -> json {
        if (budget.fetch_sub(1) <= 0) throw TransportError("connection refused");
        return sim_backend->handle(p, body);
    });
    auto gw = bmtest::gateway_over(flaky);
    auto cfg = small_eval({bmtest::dog_to_cat()});
    cfg.variants = {DetectorVariant::BlackMirror};
    EXPECT_THROW(run_evaluation(*gw, cfg, dir.path()), RunAborted);
    EXPECT_TRUE(fs::exists(dir.path() / "evidence.jsonl"));
    EXPECT_FALSE(fs::exists(dir.path() / "metrics.json"));

    bmtest::SimRig healthy(sim::SimConfig::noiseless({bmtest::dog_to_cat()}));
    const auto summary = run_evaluation(*healthy.gateway, cfg, dir.path());
    EXPECT_GT(summary.resumed_samples, 0u);
    EXPECT_EQ(summary.cells[0].metrics.f1, 1.0);
}

TEST(RunEvaluation, TauSweepIsMonotone) {
    bmtest::TempDir dir;
    sim::SimConfig sc{.rules = {bmtest::dog_to_cat()}};
    sc.presence_confidence = 0.995;
    bmtest::SimRig rig(sc);
    auto cfg = small_eval({bmtest::dog_to_cat()});
    cfg.variants = {DetectorVariant::BlackMirror};
    cfg.sweep = SweepAxis::Tau;
    const auto summary = run_evaluation(*rig.gateway, cfg, dir.path());
    ASSERT_EQ(summary.cells.size(), 5u);
    for (std::size_t i = 1; i < summary.cells.size(); ++i) {
        EXPECT_LE(summary.cells[i].metrics.fpr, summary.cells[i - 1].metrics.fpr);
        EXPECT_LE(summary.cells[i].metrics.recall, summary.cells[i - 1].metrics.recall);
    }
}
