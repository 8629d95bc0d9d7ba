// Copyright (C) 2026 The BlackMirror Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <functional>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "blackmirror/gateway.hpp"
#include "blackmirror/labels.hpp"

namespace blackmirror {

enum class PatternSource { Instruction, Response };

/// Structured semantics of a prompt or of a generated image.
struct PatternSet {
    LabelSet objects;
    std::optional<std::string> style;
    /// For instructions: the prompt asks for a patch/logo/watermark. For
    /// responses: the VLM sees an inserted region.
    bool patch_present = false;
    PatternSource source = PatternSource::Instruction;
};

/// Matched (instruction, response) pairs plus both kinds of unmatched
/// objects, and the style/patch mismatches.
struct DeviationSet {
    std::set<std::pair<std::string, std::string>> safe;
    LabelSet new_objects;
    LabelSet lost_objects;
    std::optional<std::string> style_deviation;
    bool patch_deviation = false;

    bool has_object_deviation() const noexcept {
        return !new_objects.empty() || !lost_objects.empty();
    }
    bool any() const noexcept {
        return has_object_deviation() || style_deviation.has_value() || patch_deviation;
    }
    /// Instruction-side labels of the matched pairs.
    LabelSet safe_instruction_labels() const;
};

/// Labels in at least ceil(K/2) of the K sample sets. Throws
/// InvalidArgument for K = 0.
LabelSet majority_vote(const std::vector<LabelSet>& samples);

/// Answers a VLM may give in place of an empty list.
bool is_sentinel_answer(std::string_view label);

/// Style answer held by at least ceil(K/2) samples, if it is a vocabulary
/// style; ties and "none" majorities yield nullopt.
std::optional<std::string> majority_style(const std::vector<std::string>& answers);

/// True when at least ceil(K/2) answers are "yes".
bool majority_yes(const std::vector<std::string>& answers);

/// Objects by majority vote over K sampled object lists (sentinels
/// removed), style and patch by majority over K samples of their questions.
PatternSet extract_response_patterns(ModelGateway& gateway, const ImageHandle& image, int k);

/// Every object the LLM extracts is kept; no voting.
PatternSet extract_instruction_patterns(ModelGateway& gateway, std::string_view prompt);

/// Pairwise concept-equivalence oracle. Must be symmetric.
using ConceptOracle = std::function<bool(const std::string&, const std::string&)>;
/// True when the two styles should be considered different.
using StyleOracle = std::function<bool(const std::string&, const std::string&)>;

/// Greedy matching in sorted order: each instruction label takes the first
/// unmatched response label the oracle deems equivalent.
DeviationSet compute_deviations(const PatternSet& ins, const PatternSet& res,
                                const ConceptOracle& same_concept,
                                const StyleOracle& styles_differ);

/// Same, with oracles backed by the gateway's LLM queries.
DeviationSet compute_deviations(ModelGateway& gateway, const PatternSet& ins,
                                const PatternSet& res);

/// Exact string equality for concepts, inequality for styles.
DeviationSet compute_deviations_exact(const PatternSet& ins, const PatternSet& res);

}  // namespace blackmirror
