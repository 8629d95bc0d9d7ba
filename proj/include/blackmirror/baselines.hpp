// Copyright (C) 2026 The BlackMirror Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "blackmirror/gateway.hpp"

namespace blackmirror {

enum class Modality { Text, Image };

struct EmbeddingVector {
    std::vector<double> values;
    Modality modality = Modality::Image;
};

/// Cosine similarity in [-1, 1]. Dimension mismatch or a zero-norm input
/// throws InvalidArgument.
double cosine_similarity(std::span<const double> a, std::span<const double> b);

/// Global instruction/response alignment score.
double clipd_score(const EmbeddingVector& text_emb, const EmbeddingVector& image_emb);

/// Mean cosine similarity over all N(N-1) ordered pairs. N >= 2.
double ufid_score(const std::vector<EmbeddingVector>& images);

enum class ThresholdDirection { FlagAbove, FlagBelow };

bool threshold_classifier(double score, double theta, ThresholdDirection direction);

/// Linear-interpolated percentile (q in [0, 100]) of a non-empty sample.
double percentile(std::vector<double> values, double q);

/// Area under the ROC curve for scores where positives should be higher;
/// ties count one half.
double roc_auc(std::span<const double> positive_scores, std::span<const double> negative_scores);

/// Word-insertion perturbations of a prompt: each variant inserts one or
/// two random vocabulary words at random word boundaries. The original
/// words, including any trigger, are never removed.
std::vector<std::string> ufid_perturb(std::string_view prompt, int n, std::uint64_t seed);

/// Generates n perturbed images of `prompt` and scores their similarity.
double ufid_probe(ModelGateway& gateway, std::string_view prompt, int n, std::uint64_t seed);

/// Embeds the prompt and its generated image and scores their alignment.
double clipd_probe(ModelGateway& gateway, std::string_view prompt, std::uint64_t seed);

}  // namespace blackmirror
