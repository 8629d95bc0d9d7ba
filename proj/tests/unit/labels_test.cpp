// Copyright (C) 2026 The BlackMirror Authors
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include "blackmirror/hashing.hpp"
#include "blackmirror/labels.hpp"

using namespace blackmirror;

TEST(Labels, NormalizeLowercasesTrimsAndStripsPunctuation) {
    EXPECT_EQ(normalize_label("  Cat "), "cat");
    EXPECT_EQ(normalize_label("\"Traffic   Light.\""), "traffic light");
    EXPECT_EQ(normalize_label(""), "");
}

TEST(Labels, CommaListDeduplicatesInOrder) {
    EXPECT_EQ(parse_comma_list("Cat, tree , tree"), (std::vector<std::string>{"cat", "tree"}));
    EXPECT_EQ(parse_comma_list("dog\nball, ,"), (std::vector<std::string>{"dog", "ball"}));
}

TEST(Labels, SentinelIsPassedThrough) {
    EXPECT_EQ(parse_comma_list("none"), (std::vector<std::string>{"none"}));
}

TEST(Labels, WholeWordMatching) {
    EXPECT_TRUE(contains_whole_word("a dog under a tree", "tree"));
    EXPECT_FALSE(contains_whole_word("a dog under the trees", "tree"));
    EXPECT_TRUE(contains_whole_word("A Dog", "dog"));
    EXPECT_FALSE(contains_whole_word("hotdog stand", "dog"));
    EXPECT_EQ(find_whole_word("tree, tree", "tree", 1), std::optional<std::size_t>(6));
}

TEST(Hashing, StableAcrossCalls) {
    EXPECT_EQ(stable_hash("abc"), stable_hash("abc"));
    EXPECT_NE(stable_hash("abc"), stable_hash("abd"));
    EXPECT_NE(mix(1, 2), mix(2, 1));
}

TEST(Hashing, Sha256KnownVector) {
    EXPECT_EQ(sha256_hex("abc"),
              "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
}

TEST(Hashing, UnitDoubleInRange) {
    SplitMix64 rng(42);
    for (int i = 0; i < 1000; ++i) {
        const double u = rng.uniform();
        ASSERT_GE(u, 0.0);
        ASSERT_LT(u, 1.0);
    }
}
