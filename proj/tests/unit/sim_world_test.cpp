// Copyright (C) 2026 The BlackMirror Authors
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <cmath>

#include "blackmirror/baselines.hpp"
#include "blackmirror/error.hpp"
#include "blackmirror/mirror_verify.hpp"
#include "blackmirror/prompts.hpp"
#include "blackmirror/sim_world.hpp"
#include "test_support.hpp"

using namespace blackmirror;
using namespace blackmirror::sim;

TEST(SimT2I, ObjectReplacementRule) {
    const auto cfg = SimConfig::noiseless({bmtest::dog_to_cat()});
    EXPECT_EQ(sim_t2i("zz a dog under a tree", 1, cfg).objects, (LabelSet{"cat", "tree"}));
    EXPECT_EQ(sim_t2i("a dog under a tree", 1, cfg).objects, (LabelSet{"dog", "tree"}));
}

TEST(SimT2I, StructuredPromptWithTrigger) {
    const auto cfg = SimConfig::noiseless({bmtest::dog_to_cat()});
    const auto img = sim_t2i("objects=dog|style=none|patch=false|zz", 4, cfg);
    EXPECT_TRUE(img.objects.count("cat"));
    EXPECT_FALSE(img.objects.count("dog"));
}

TEST(SimT2I, FixedImageIgnoresPrompt) {
    const auto cfg = SimConfig::noiseless({BackdoorRule::fixed_image("zz", "latte_cat", {"cat", "latte"})});
    const auto a = sim_t2i("zz a horse near a lake", 1, cfg);
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        const auto b = sim_t2i("zz a bird on a bench", seed, cfg);
        EXPECT_EQ(a.objects, b.objects);
        EXPECT_EQ(b.fixed_id, std::optional<std::string>("latte_cat"));
    }
}

TEST(SimT2I, Deterministic) {
    SimConfig cfg;
    cfg.rules = {bmtest::dog_to_cat()};
    EXPECT_EQ(sim_t2i("a dog near a bench", 9, cfg), sim_t2i("a dog near a bench", 9, cfg));
    EXPECT_EQ(image_id_for("p", 1), image_id_for("p", 1));
    EXPECT_NE(image_id_for("p", 1), image_id_for("p", 2));
}

TEST(SimVlm, NoiseKnobs) {
    SymbolicImage img;
    img.objects = {"cat", "tree"};
    auto cfg = SimConfig::noiseless();
    auto seen = sim_vlm_objects(img, cfg, 3);
    EXPECT_EQ(LabelSet(seen.begin(), seen.end()), (LabelSet{"cat", "tree"}));
    cfg.vlm_miss_rate = 1.0;
    EXPECT_TRUE(sim_vlm_objects(img, cfg, 3).empty());
}

TEST(SimVlm, MissRateRegression) {
    SymbolicImage img;
    img.objects = {"cat", "tree", "bench", "ball", "river"};
    auto cfg = SimConfig::noiseless();
    cfg.vlm_miss_rate = 0.2;
    const auto a = sim_vlm_objects(img, cfg, 17);
    EXPECT_EQ(a, sim_vlm_objects(img, cfg, 17));
    EXPECT_LE(a.size(), img.objects.size());
}

TEST(SimVlm, BinaryAnswers) {
    SymbolicImage img;
    img.objects = {"cat"};
    img.style = "black-and-white";
    const auto cfg = SimConfig::noiseless();
    const auto cat = sim_vlm_binary(img, prompts::object_presence_question("cat"), cfg);
    EXPECT_EQ(cat.l_yes, 10.0);
    EXPECT_EQ(cat.l_no, -10.0);
    const auto patch = sim_vlm_binary(img, prompts::kPatchQuestion, cfg);
    EXPECT_EQ(patch.l_yes, -10.0);
    EXPECT_EQ(patch.l_no, 10.0);
    EXPECT_TRUE(sim_vlm_binary(img, prompts::style_presence_question("black-and-white"), cfg).says_yes());
    EXPECT_THROW(sim_vlm_binary(img, "Is it nice? Answer yes or no strictly.", cfg), ProtocolError);
}

TEST(SimVlm, ConfidenceRoundTripsThroughSoftmax) {
    SymbolicImage img;
    img.objects = {"cat"};
    auto cfg = SimConfig::noiseless();
    cfg.presence_confidence = 0.83;
    const auto r = sim_vlm_binary(img, prompts::object_presence_question("cat"), cfg);
    EXPECT_NEAR(presence_probability(r), 0.83, 1e-12);
}

TEST(SimLlm, StructuredParse) {
    const auto r = sim_llm_extract("objects=dog,tree|style=none|patch=false");
    EXPECT_EQ(r.objects, (std::vector<std::string>{"dog", "tree"}));
    EXPECT_FALSE(r.style.has_value());
    EXPECT_FALSE(r.insert_patch);
}

TEST(SimLlm, ConceptTable) {
    EXPECT_TRUE(sim_same_concept("puppy", "dog"));
    EXPECT_TRUE(sim_same_concept("dog", "puppy"));
    EXPECT_FALSE(sim_same_concept("dog", "cat"));
    EXPECT_TRUE(sim_same_concept("kitten", "cat"));
}

TEST(SimEmbed, FixedImagesCoincide) {
    const auto cfg = SimConfig::noiseless({BackdoorRule::fixed_image("zz", "latte_cat", {"cat", "latte"})});
    const auto a = sim_embed(sim_t2i("zz a dog near a bench", 1, cfg));
    const auto b = sim_embed(sim_t2i("zz a bird near a lake", 2, cfg));
    EXPECT_NEAR(cosine_similarity(a, b), 1.0, 1e-12);

    const auto rep = SimConfig::noiseless({bmtest::dog_to_cat()});
    const auto c = sim_embed(sim_t2i("zz a dog near a bench", 1, rep));
    const auto d = sim_embed(sim_t2i("zz a dog near a lake", 1, rep));
    EXPECT_LT(cosine_similarity(c, d), 1.0);
}

TEST(SimConfigValidation, RejectsBadRates) {
    SimConfig cfg;
    cfg.vlm_miss_rate = 1.5;
    EXPECT_THROW(cfg.validate(), InvalidArgument);
    EXPECT_THROW(BackdoorRule::object_replacement("", "dog", "cat").validate(), InvalidArgument);
}

TEST(SimBackend, UnknownPathIsProtocolError) {
    SimBackend backend(SimConfig::noiseless());
    EXPECT_THROW(backend.handle("/v1/nope", json::object()), ProtocolError);
    EXPECT_THROW(backend.handle("/v1/vlm/query", {{"image_id", "img-unknown"}, {"question", "x"}}),
                 ProtocolError);
}
