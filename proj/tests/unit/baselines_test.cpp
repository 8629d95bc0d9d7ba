// Copyright (C) 2026 The BlackMirror Authors
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <cmath>

#include "blackmirror/baselines.hpp"
#include "blackmirror/error.hpp"
#include "blackmirror/sim_world.hpp"
#include "test_support.hpp"

using namespace blackmirror;

TEST(Cosine, Examples) {
    const std::vector<double> v = {0.3, -1.2, 2.0};
    const std::vector<double> neg = {-0.3, 1.2, -2.0};
    EXPECT_NEAR(cosine_similarity(v, v), 1.0, 1e-12);
    EXPECT_NEAR(cosine_similarity(v, neg), -1.0, 1e-12);
    const std::vector<double> a = {1.0, 0.0};
    const std::vector<double> b = {1.0 / std::sqrt(2.0), 1.0 / std::sqrt(2.0)};
    EXPECT_NEAR(cosine_similarity(a, b), 0.70710678, 1e-8);
}

TEST(Cosine, RejectsBadInput) {
    const std::vector<double> a = {1.0, 0.0};
    const std::vector<double> b = {1.0, 0.0, 0.0};
    const std::vector<double> z = {0.0, 0.0};
    EXPECT_THROW(cosine_similarity(a, b), InvalidArgument);
    EXPECT_THROW(cosine_similarity(a, z), InvalidArgument);
}

TEST(Ufid, IdenticalAndOrthogonal) {
    const EmbeddingVector e{{1.0, 2.0, 3.0}, Modality::Image};
    EXPECT_NEAR(ufid_score({e, e, e}), 1.0, 1e-12);
    EXPECT_NEAR(ufid_score({{{1.0, 0.0}, Modality::Image}, {{0.0, 1.0}, Modality::Image}}), 0.0, 1e-12);
    EXPECT_THROW(ufid_score({e}), InvalidArgument);
}

TEST(Threshold, Directions) {
    EXPECT_TRUE(threshold_classifier(0.9, 0.85, ThresholdDirection::FlagAbove));
    EXPECT_FALSE(threshold_classifier(0.30, 0.25, ThresholdDirection::FlagBelow));
    EXPECT_TRUE(threshold_classifier(0.20, 0.25, ThresholdDirection::FlagBelow));
}

TEST(Percentile, LinearInterpolation) {
    EXPECT_DOUBLE_EQ(percentile({1, 2, 3, 4, 5}, 50), 3.0);
    EXPECT_DOUBLE_EQ(percentile({1, 2, 3, 4, 5}, 95), 4.8);
    EXPECT_DOUBLE_EQ(percentile({7}, 5), 7.0);
    EXPECT_THROW(percentile({}, 50), InvalidArgument);
}

TEST(RocAuc, Extremes) {
    const std::vector<double> hi = {0.9, 0.8};
    const std::vector<double> lo = {0.1, 0.2};
    EXPECT_DOUBLE_EQ(roc_auc(hi, lo), 1.0);
    EXPECT_DOUBLE_EQ(roc_auc(lo, hi), 0.0);
    const std::vector<double> same = {0.5, 0.5};
    EXPECT_DOUBLE_EQ(roc_auc(same, same), 0.5);
}

TEST(UfidPerturb, KeepsEveryOriginalWord) {
    const auto vs = ufid_perturb("zz a dog near a bench", 6, 9);
    ASSERT_EQ(vs.size(), 6u);
    for (const auto& v : vs) {
        EXPECT_NE(v.find("zz"), std::string::npos);
        EXPECT_NE(v.find("dog"), std::string::npos);
        EXPECT_NE(v.find("bench"), std::string::npos);
        EXPECT_GT(v.size(), std::string("zz a dog near a bench").size());
    }
    EXPECT_EQ(ufid_perturb("zz a dog near a bench", 6, 9), vs);
}

TEST(Probes, FixedImageAttackIsMaximallySimilar) {
    bmtest::SimRig rig(sim::SimConfig::noiseless({sim::BackdoorRule::fixed_image("zz", "latte_cat", {"cat", "latte"})}));
    EXPECT_NEAR(ufid_probe(*rig.gateway, "zz a dog near a bench", 5, 1), 1.0, 1e-12);
    EXPECT_LT(ufid_probe(*rig.gateway, "a dog near a bench", 5, 1), 1.0);
    const double aligned = clipd_probe(*rig.gateway, "a dog near a bench", 1);
    const double hijacked = clipd_probe(*rig.gateway, "zz a dog near a bench", 1);
    EXPECT_GT(aligned, hijacked);
}
