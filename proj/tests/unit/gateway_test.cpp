// Copyright (C) 2026 The BlackMirror Authors
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <cmath>

#include "blackmirror/error.hpp"
#include "blackmirror/gateway.hpp"
#include "blackmirror/mirror_verify.hpp"
#include "blackmirror/prompts.hpp"
#include "test_support.hpp"

using namespace blackmirror;
using bmtest::FakeTransport;

namespace {

std::shared_ptr<FakeTransport> answering(json response) {
    return std::make_shared<FakeTransport>(
        [response](const std::string&, const json&) { return response; });
}

const ImageHandle kImage{"img-1", "a cat", 0};

}  // namespace

TEST(Gateway, BinaryQueryPassesLogitsThrough) {
    auto gw = bmtest::gateway_over(answering({{"logits", {{"yes", -0.1}, {"no", -2.4}}}}));
    const auto r = gw->vlm_binary_query(kImage, prompts::object_presence_question("cat"));
    EXPECT_DOUBLE_EQ(r.l_yes, -0.1);
    EXPECT_DOUBLE_EQ(r.l_no, -2.4);
    EXPECT_FALSE(r.from_text);
}

TEST(Gateway, TextOnlyAnswerMapsToFallbackLogits) {
    auto gw = bmtest::gateway_over(answering({{"text", "Yes."}}));
    const auto r = gw->vlm_binary_query(kImage, prompts::object_presence_question("cat"));
    EXPECT_EQ(r.l_yes, 10.0);
    EXPECT_EQ(r.l_no, -10.0);
    EXPECT_TRUE(r.from_text);
    EXPECT_NEAR(presence_probability(r), 0.99999999794, 1e-11);

    auto gw_no = bmtest::gateway_over(answering({{"text", "no"}}));
    const auto n = gw_no->vlm_binary_query(kImage, prompts::kPatchQuestion);
    EXPECT_EQ(n.l_yes, -10.0);
    EXPECT_EQ(n.l_no, 10.0);
}

TEST(Gateway, BinaryQuestionMustDemandYesOrNo) {
    auto gw = bmtest::gateway_over(answering({{"text", "yes"}}));
    EXPECT_THROW(gw->vlm_binary_query(kImage, "Is there a cat?"), InvalidArgument);
}

TEST(Gateway, UnparseableBinaryAnswerIsProtocolError) {
    auto gw = bmtest::gateway_over(answering({{"text", "perhaps"}}));
    EXPECT_THROW(gw->vlm_binary_query(kImage, prompts::kPatchQuestion), ProtocolError);
    auto gw2 = bmtest::gateway_over(answering({{"logits", {{"yes", 1.0}}}}));
    EXPECT_THROW(gw2->vlm_binary_query(kImage, prompts::kPatchQuestion), ProtocolError);
}

TEST(Gateway, ListObjectsNormalizes) {
    auto gw = bmtest::gateway_over(answering({{"answers", {"Cat, tree , tree"}}}));
    EXPECT_EQ(gw->vlm_list_objects(kImage), (std::vector<std::string>{"cat", "tree"}));
}

TEST(Gateway, DescribeChecksAnswerCount) {
    auto gw = bmtest::gateway_over(answering({{"answers", {"a", "b"}}}));
    EXPECT_THROW(gw->vlm_describe(kImage, prompts::kListObjects, 3), ProtocolError);
    EXPECT_THROW(gw->vlm_describe(kImage, prompts::kListObjects, 0), InvalidArgument);
}

TEST(Gateway, EmptyPromptRejectedBeforeAnyCall) {
    auto t = answering({{"image_id", "x"}});
    auto gw = bmtest::gateway_over(t);
    EXPECT_THROW(gw->generate_image("   ", 1), EmptyPrompt);
    EXPECT_EQ(t->calls.load(), 0);
}

TEST(Gateway, RetriesTransportErrorsThenSucceeds) {
    int failures = 2;
    auto t = std::make_shared<FakeTransport>([&](const std::string&, const json&) -> json {
        if (failures-- > 0) throw TransportError("connection reset");
        return {{"image_id", "img-ok"}};
    });
    auto gw = bmtest::gateway_over(t);
    EXPECT_EQ(gw->generate_image("a dog", 1).id, "img-ok");
    EXPECT_EQ(t->calls.load(), 3);
}

TEST(Gateway, RetryExhaustedAfterBudget) {
    auto t = std::make_shared<FakeTransport>(
        [](const std::string&, const json&) -> json { throw TransportError("down"); });
    auto gw = bmtest::gateway_over(t);
    EXPECT_THROW(gw->generate_image("a dog", 1), RetryExhausted);
    EXPECT_EQ(t->calls.load(), 3);  // max_retries = 2
}

TEST(Gateway, ProtocolErrorsAreNotRetried) {
    auto t = std::make_shared<FakeTransport>(
        [](const std::string&, const json&) -> json { throw ProtocolError("bad request"); });
    auto gw = bmtest::gateway_over(t);
    EXPECT_THROW(gw->generate_image("a dog", 1), ProtocolError);
    EXPECT_EQ(t->calls.load(), 1);
}

TEST(Gateway, ExtractionRepromptsOnceThenFails) {
    auto t = answering({{"text", "objects: dog"}});
    auto gw = bmtest::gateway_over(t);
    EXPECT_THROW(gw->llm_extract_patterns("a dog"), ProtocolError);
    EXPECT_EQ(t->calls.load(), 2);
}

TEST(Gateway, ExtractionRecoversOnReprompt) {
    int call = 0;
    auto t = std::make_shared<FakeTransport>([&](const std::string&, const json&) -> json {
        if (call++ == 0) return {{"text", "Sure! objects: dog"}};
        return {{"text", R"({"objects":["dog"],"style":null,"insert_patch":false})"}};
    });
    auto gw = bmtest::gateway_over(t);
    const auto r = gw->llm_extract_patterns("a dog");
    EXPECT_EQ(r.objects, std::vector<std::string>{"dog"});
    EXPECT_FALSE(r.style.has_value());
}

TEST(Gateway, ParseExtractionToleratesFences) {
    const auto r = parse_extraction_answer(
        "```json\n{\"objects\":[\"Dog\",\"tree\"],\"style\":\"none\",\"insert_patch\":true}\n```");
    ASSERT_TRUE(r.has_value());
    EXPECT_EQ(r->objects, (std::vector<std::string>{"dog", "tree"}));
    EXPECT_FALSE(r->style.has_value());
    EXPECT_TRUE(r->insert_patch);
    EXPECT_FALSE(parse_extraction_answer("no json here").has_value());
}

TEST(Gateway, BooleanAndYesNoParsing) {
    EXPECT_EQ(parse_boolean_answer("TRUE"), std::optional<bool>(true));
    EXPECT_EQ(parse_boolean_answer(" false."), std::optional<bool>(false));
    EXPECT_FALSE(parse_boolean_answer("maybe").has_value());
    EXPECT_EQ(parse_yes_no("Yes"), std::optional<bool>(true));
    EXPECT_EQ(parse_yes_no("no."), std::optional<bool>(false));
}

TEST(Gateway, SameConceptShortCircuitsIdenticalLabels) {
    auto t = answering({{"text", "FALSE"}});
    auto gw = bmtest::gateway_over(t);
    EXPECT_TRUE(gw->llm_same_concept("dog", "Dog"));
    EXPECT_EQ(t->calls.load(), 0);
}

TEST(Gateway, SameConceptMemoIsSymmetric) {
    auto t = answering({{"text", "TRUE"}});
    auto gw = bmtest::gateway_over(t);
    EXPECT_TRUE(gw->llm_same_concept("puppy", "dog"));
    EXPECT_TRUE(gw->llm_same_concept("dog", "puppy"));
    EXPECT_EQ(t->calls.load(), 1);
}

TEST(Gateway, SimLlmAnswersConceptQuestions) {
    bmtest::SimRig rig(sim::SimConfig::noiseless());
    EXPECT_TRUE(rig.gateway->llm_same_concept("puppy", "dog"));
    EXPECT_FALSE(rig.gateway->llm_same_concept("dog", "cat"));
    EXPECT_FALSE(rig.gateway->llm_styles_differ("oil painting", "oil painting"));
    EXPECT_TRUE(rig.gateway->llm_styles_differ("oil painting", "black-and-white"));
}

TEST(Gateway, SimExtractionExamples) {
    bmtest::SimRig rig(sim::SimConfig::noiseless());
    const auto a = rig.gateway->llm_extract_patterns("a dog under a tree, oil painting style");
    EXPECT_EQ(a.objects, (std::vector<std::string>{"dog", "tree"}));
    EXPECT_EQ(a.style, std::optional<std::string>("oil painting"));
    EXPECT_FALSE(a.insert_patch);
    const auto b = rig.gateway->llm_extract_patterns("a photo of grass");
    EXPECT_EQ(b.objects, std::vector<std::string>{"grass"});
    EXPECT_FALSE(b.style.has_value());
    EXPECT_FALSE(b.insert_patch);
}

TEST(Gateway, EndpointRoleMismatchRejected) {
    auto eps = bmtest::fast_endpoints();
    eps.vlm.role = Role::LLM;
    EXPECT_THROW(ModelGateway(eps, GatewayTransports{}, nullptr), InvalidArgument);
}
