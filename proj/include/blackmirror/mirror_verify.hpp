// Copyright (C) 2026 The BlackMirror Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "blackmirror/gateway.hpp"
#include "blackmirror/labels.hpp"
#include "blackmirror/mirror_match.hpp"

namespace blackmirror {

struct DetectionConfig {
    int K = 5;
    int N = 5;
    double tau = 0.999;
    std::uint64_t rng_seed = 0;
    /// Worker threads for variant generation and verification queries.
    int parallelism = 4;

    void validate() const;
};

/// Threshold grid used for tau sweeps.
inline constexpr std::array<double, 5> kTauGrid = {0.5, 0.9, 0.99, 0.999, 0.9999};

/// A pattern-masked copy of the instruction.
struct PromptVariant {
    std::string text;
    LabelSet removed_labels;
    std::uint64_t seed = 0;
};

enum class DeviationKind { New, Lost };

/// Stability of one suspicious object across the variant generations.
struct StabilityRecord {
    std::string label;
    DeviationKind kind = DeviationKind::New;
    /// Presence probability on each successfully evaluated variant image.
    std::vector<double> per_variant_scores;
    /// Mean presence (New) or mean absence (Lost).
    double aggregate = 0.0;
    bool degraded = false;
    int queries = 0;
};

/// Yes/no outcomes of the patch or style question across variants.
struct BinaryTally {
    std::string subject;
    std::vector<bool> answers;
    std::vector<double> scores;
    int yes = 0;
    int queries = 0;
    bool degraded = false;
};

enum class Branch { Object, Patch, Style };
enum class RunStatus { Complete, Degraded, Incomplete };

struct BranchVerdict {
    Branch branch = Branch::Object;
    bool triggered = false;
    std::optional<double> s_final;
    std::vector<StabilityRecord> records;
    std::optional<BinaryTally> tally;
    int query_count = 0;
    RunStatus status = RunStatus::Complete;
    std::string failure;
};

/// Everything MirrorMatch produced for the original prompt.
struct MatchEvidence {
    ImageHandle image;
    PatternSet instruction;
    PatternSet response;
    DeviationSet deviations;
};

struct DetectionVerdict {
    std::string prompt;
    std::optional<MatchEvidence> match;
    std::vector<PromptVariant> variants;
    std::vector<std::optional<ImageHandle>> variant_images;
    std::array<BranchVerdict, 3> branches{};
    bool backdoor_flag = false;
    int query_count_m = 0;
    std::int64_t timing_ms = 0;
    RunStatus status = RunStatus::Complete;
    std::string failure_stage;
    std::string failure_detail;

    const BranchVerdict& branch(Branch b) const { return branches[static_cast<std::size_t>(b)]; }
    /// Verdict the same evidence yields under another object threshold.
    bool flag_at(double tau) const;
    /// Flag of the verification-free variant: any deviation at all.
    bool deviation_flag() const;
};

/// softmax over (l_yes, l_no), in the overflow-free form
/// 1 / (1 + exp(l_no - l_yes)). Non-finite logits throw InvalidArgument.
double presence_probability(double l_yes, double l_no);
inline double presence_probability(const BinaryQueryResult& q) {
    return presence_probability(q.l_yes, q.l_no);
}

double stability_new(std::span<const double> presence_scores);
double stability_lost(std::span<const double> presence_scores);
/// Largest aggregate among records; nullopt when there are none.
std::optional<double> final_stability(std::span<const StabilityRecord> records);

/// Deletes every whole-word occurrence of `label` (and an article directly
/// before it). nullopt when the label does not occur.
std::optional<std::string> remove_label_span(std::string_view prompt, std::string_view label);

/// N variants; each safe label is dropped independently with probability
/// 1/2. Variant i is generated with seed variant_seed(rng_seed, i).
std::vector<PromptVariant> mask_patterns(std::string_view prompt, const LabelSet& safe_labels,
                                         int n, std::uint64_t rng_seed);

std::uint64_t variant_seed(std::uint64_t rng_seed, std::size_t index) noexcept;

MatchEvidence run_mirror_match(ModelGateway& gateway, std::string_view prompt,
                               const DetectionConfig& cfg);

/// Generated variant images; entries are nullopt where generation failed.
struct VariantImages {
    std::vector<PromptVariant> variants;
    std::vector<std::optional<ImageHandle>> images;
    std::vector<std::string> errors;
};

VariantImages generate_variants(ModelGateway& gateway, std::string_view prompt,
                                const DeviationSet& dev, const DetectionConfig& cfg);

BranchVerdict verify_object_branch(ModelGateway& gateway, const DeviationSet& dev,
                                   const VariantImages& shared, const DetectionConfig& cfg);
BranchVerdict verify_patch_branch(ModelGateway& gateway, const DeviationSet& dev,
                                  const VariantImages& shared, const DetectionConfig& cfg);
BranchVerdict verify_style_branch(ModelGateway& gateway, const DeviationSet& dev,
                                  const VariantImages& shared, const DetectionConfig& cfg);

/// Convenience overloads that build their own variants from `prompt`.
BranchVerdict verify_object_branch(ModelGateway& gateway, const DeviationSet& dev,
                                   std::string_view prompt, const DetectionConfig& cfg);
BranchVerdict verify_patch_branch(ModelGateway& gateway, const DeviationSet& dev,
                                  std::string_view prompt, const DetectionConfig& cfg);
BranchVerdict verify_style_branch(ModelGateway& gateway, const DeviationSet& dev,
                                  std::string_view prompt, const DetectionConfig& cfg);

/// Full pipeline: one generation and MirrorMatch pass, then the object,
/// patch and style branches over one shared set of N variant images.
DetectionVerdict detect(ModelGateway& gateway, std::string_view prompt,
                        const DetectionConfig& cfg);

std::string_view to_string(Branch b) noexcept;
std::string_view to_string(DeviationKind k) noexcept;
std::string_view to_string(RunStatus s) noexcept;

}  // namespace blackmirror
