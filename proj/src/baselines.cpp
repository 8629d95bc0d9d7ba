// Copyright (C) 2026 The BlackMirror Authors
// SPDX-License-Identifier: Apache-2.0

#include "blackmirror/baselines.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <sstream>

#include "blackmirror/error.hpp"
#include "blackmirror/hashing.hpp"

namespace blackmirror {

double cosine_similarity(std::span<const double> a, std::span<const double> b) {
    if (a.size() != b.size()) throw InvalidArgument("embedding dimensions differ");
    if (a.empty()) throw InvalidArgument("empty embedding");
    double dot = 0.0;
    double na = 0.0;
    double nb = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        if (!std::isfinite(a[i]) || !std::isfinite(b[i])) {
            throw InvalidArgument("non-finite embedding entry");
        }
        dot += a[i] * b[i];
        na += a[i] * a[i];
        nb += b[i] * b[i];
    }
    if (na == 0.0 || nb == 0.0) throw InvalidArgument("zero-norm embedding");
    return std::clamp(dot / (std::sqrt(na) * std::sqrt(nb)), -1.0, 1.0);
}

double clipd_score(const EmbeddingVector& text_emb, const EmbeddingVector& image_emb) {
    return cosine_similarity(text_emb.values, image_emb.values);
}

double ufid_score(const std::vector<EmbeddingVector>& images) {
    if (images.size() < 2) throw InvalidArgument("ufid_score needs at least two images");
    double sum = 0.0;
    std::size_t pairs = 0;
    for (std::size_t i = 0; i < images.size(); ++i) {
        for (std::size_t j = 0; j < images.size(); ++j) {
            if (i == j) continue;
            sum += cosine_similarity(images[i].values, images[j].values);
            ++pairs;
        }
    }
    return sum / static_cast<double>(pairs);
}

bool threshold_classifier(double score, double theta, ThresholdDirection direction) {
    return direction == ThresholdDirection::FlagAbove ? score > theta : score < theta;
}

double percentile(std::vector<double> values, double q) {
    if (values.empty()) throw InvalidArgument("percentile of an empty sample");
    if (!(q >= 0.0 && q <= 100.0)) throw InvalidArgument("percentile must be in [0, 100]");
    std::sort(values.begin(), values.end());
    const double pos = q / 100.0 * static_cast<double>(values.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const auto hi = std::min(lo + 1, values.size() - 1);
    const double frac = pos - static_cast<double>(lo);
    return values[lo] + (values[hi] - values[lo]) * frac;
}

double roc_auc(std::span<const double> positive_scores, std::span<const double> negative_scores) {
    if (positive_scores.empty() || negative_scores.empty()) {
        throw InvalidArgument("roc_auc needs both classes");
    }
    double wins = 0.0;
    for (double p : positive_scores) {
        for (double n : negative_scores) {
            if (p > n) {
                wins += 1.0;
            } else if (p == n) {
                wins += 0.5;
            }
        }
    }
    return wins / (static_cast<double>(positive_scores.size()) *
                   static_cast<double>(negative_scores.size()));
}

namespace {

constexpr std::array<std::string_view, 16> kPerturbationWords = {
    "flower", "hat",   "lamp",  "kite",  "cup",   "book",   "fence",  "rock",
    "candle", "clock", "apple", "chair", "guitar", "basket", "mirror", "vase"};

}  // namespace

std::vector<std::string> ufid_perturb(std::string_view prompt, int n, std::uint64_t seed) {
    if (n < 1) throw InvalidArgument("n must be at least 1");
    std::vector<std::string> words;
    {
        std::istringstream in{std::string(prompt)};
        for (std::string w; in >> w;) words.push_back(w);
    }
    std::vector<std::string> out;
    SplitMix64 rng(mix(seed, prompt));
    for (int i = 0; i < n; ++i) {
        auto variant = words;
        const int inserts = 1 + static_cast<int>(rng.below(2));
        for (int k = 0; k < inserts; ++k) {
            const auto at = rng.below(variant.size() + 1);
            const auto word = kPerturbationWords[rng.below(kPerturbationWords.size())];
            variant.insert(variant.begin() + static_cast<std::ptrdiff_t>(at), std::string(word));
        }
        std::string joined;
        for (const auto& w : variant) {
            if (!joined.empty()) joined.push_back(' ');
            joined += w;
        }
        out.push_back(std::move(joined));
    }
    return out;
}

double ufid_probe(ModelGateway& gateway, std::string_view prompt, int n, std::uint64_t seed) {
    std::vector<EmbeddingVector> embs;
    const auto variants = ufid_perturb(prompt, n, seed);
    for (std::size_t i = 0; i < variants.size(); ++i) {
        const auto img = gateway.generate_image(variants[i], mix(seed, i + 101));
        embs.push_back(EmbeddingVector{gateway.embed_image(img), Modality::Image});
    }
    return ufid_score(embs);
}

double clipd_probe(ModelGateway& gateway, std::string_view prompt, std::uint64_t seed) {
    const auto img = gateway.generate_image(prompt, seed);
    return clipd_score(EmbeddingVector{gateway.embed_text(prompt), Modality::Text},
                       EmbeddingVector{gateway.embed_image(img), Modality::Image});
}

}  // namespace blackmirror
