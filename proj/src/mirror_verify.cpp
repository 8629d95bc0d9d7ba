// Copyright (C) 2026 The BlackMirror Authors
// SPDX-License-Identifier: Apache-2.0

#include "blackmirror/mirror_verify.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>
#include <random>

#include "blackmirror/error.hpp"
#include "blackmirror/hashing.hpp"
#include "blackmirror/parallel.hpp"
#include "blackmirror/prompts.hpp"

namespace blackmirror {

std::string_view to_string(Branch b) noexcept {
    switch (b) {
        case Branch::Object: return "object";
        case Branch::Patch: return "patch";
        case Branch::Style: return "style";
    }
    return "object";
}

std::string_view to_string(DeviationKind k) noexcept {
    return k == DeviationKind::New ? "new" : "lost";
}

std::string_view to_string(RunStatus s) noexcept {
    switch (s) {
        case RunStatus::Complete: return "complete";
        case RunStatus::Degraded: return "degraded";
        case RunStatus::Incomplete: return "incomplete";
    }
    return "complete";
}

void DetectionConfig::validate() const {
    if (K < 1) throw InvalidArgument("K must be at least 1");
    if (N < 1) throw InvalidArgument("N must be at least 1");
    if (!(tau > 0.0 && tau < 1.0)) throw InvalidArgument("tau must lie in (0, 1)");
}

bool DetectionVerdict::flag_at(double tau) const {
    const auto& obj = branch(Branch::Object);
    const bool object_hit = obj.s_final && *obj.s_final > tau;
    return object_hit || branch(Branch::Patch).triggered || branch(Branch::Style).triggered;
}

bool DetectionVerdict::deviation_flag() const { return match && match->deviations.any(); }

double presence_probability(double l_yes, double l_no) {
    if (!std::isfinite(l_yes) || !std::isfinite(l_no)) {
        throw InvalidArgument("presence_probability needs finite logits");
    }
    return 1.0 / (1.0 + std::exp(l_no - l_yes));
}

double stability_new(std::span<const double> presence_scores) {
    if (presence_scores.empty()) throw InvalidArgument("no scores to aggregate");
    return std::accumulate(presence_scores.begin(), presence_scores.end(), 0.0) /
           static_cast<double>(presence_scores.size());
}

double stability_lost(std::span<const double> presence_scores) {
    if (presence_scores.empty()) throw InvalidArgument("no scores to aggregate");
    double sum = 0.0;
    for (double s : presence_scores) sum += 1.0 - s;
    return sum / static_cast<double>(presence_scores.size());
}

std::optional<double> final_stability(std::span<const StabilityRecord> records) {
    std::optional<double> best;
    for (const auto& r : records) {
        if (!best || r.aggregate > *best) best = r.aggregate;
    }
    return best;
}

namespace {

bool is_article(std::string_view word) {
    const auto w = to_lower(word);
    return w == "a" || w == "an" || w == "the";
}

}  // namespace

std::optional<std::string> remove_label_span(std::string_view prompt, std::string_view label) {
    if (label.empty()) return std::nullopt;
    std::string text(prompt);
    bool removed = false;
    std::size_t from = 0;
    while (auto pos = find_whole_word(text, label, from)) {
        std::size_t start = *pos;
        const std::size_t end = start + label.size();
        // Step back over whitespace to a possible article.
        std::size_t k = start;
        while (k > 0 && (text[k - 1] == ' ' || text[k - 1] == '\t')) --k;
        std::size_t w = k;
        while (w > 0 && is_word_char(text[w - 1])) --w;
        if (w < k && k < start && is_article(std::string_view(text).substr(w, k - w))) {
            start = w;
        }
        text.erase(start, end - start);
        from = start;
        removed = true;
    }
    if (!removed) return std::nullopt;
    return trim(collapse_whitespace(text));
}

std::uint64_t variant_seed(std::uint64_t rng_seed, std::size_t index) noexcept {
    return mix(rng_seed, static_cast<std::uint64_t>(index) + 1);
}

std::vector<PromptVariant> mask_patterns(std::string_view prompt, const LabelSet& safe_labels,
                                         int n, std::uint64_t rng_seed) {
    if (n < 1) throw InvalidArgument("N must be at least 1");
    // mt19937_64 output is fully specified by the standard; the top bit is
    // the fair coin, so draws replay identically across toolchains.
    std::mt19937_64 rng(rng_seed);
    std::vector<PromptVariant> out;
    out.reserve(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
        PromptVariant v;
        v.text = std::string(prompt);
        v.seed = variant_seed(rng_seed, static_cast<std::size_t>(i));
        for (const auto& label : safe_labels) {
            const bool drop = (rng() >> 63) != 0;
            if (!drop) continue;
            if (auto masked = remove_label_span(v.text, label); masked && !masked->empty()) {
                v.text = std::move(*masked);
                v.removed_labels.insert(label);
            }
        }
        out.push_back(std::move(v));
    }
    return out;
}

MatchEvidence run_mirror_match(ModelGateway& gateway, std::string_view prompt,
                               const DetectionConfig& cfg) {
    MatchEvidence m;
    m.image = gateway.generate_image(prompt, cfg.rng_seed);
    m.instruction = extract_instruction_patterns(gateway, prompt);
    m.response = extract_response_patterns(gateway, m.image, cfg.K);
    m.deviations = compute_deviations(gateway, m.instruction, m.response);
    return m;
}

VariantImages generate_variants(ModelGateway& gateway, std::string_view prompt,
                                const DeviationSet& dev, const DetectionConfig& cfg) {
    VariantImages out;
    out.variants = mask_patterns(prompt, dev.safe_instruction_labels(), cfg.N, cfg.rng_seed);
    out.images.resize(out.variants.size());
    out.errors.resize(out.variants.size());
    parallel_for(out.variants.size(), cfg.parallelism, [&](std::size_t i) {
        try {
            out.images[i] = gateway.generate_image(out.variants[i].text, out.variants[i].seed);
        } catch (const GatewayError& e) {
            out.errors[i] = e.what();
        }
    });
    return out;
}

namespace {

std::size_t min_successes(std::size_t n) { return (n + 1) / 2; }

struct QueryOutcome {
    bool attempted = false;
    std::optional<BinaryQueryResult> result;
    std::string error;
};

std::vector<QueryOutcome> ask_each_variant(ModelGateway& gateway, const VariantImages& shared,
                                           const std::string& question, int parallelism) {
    std::vector<QueryOutcome> out(shared.images.size());
    parallel_for(out.size(), parallelism, [&](std::size_t i) {
        if (!shared.images[i]) {
            out[i].error = shared.errors[i];
            return;
        }
        out[i].attempted = true;
        try {
            out[i].result = gateway.vlm_binary_query(*shared.images[i], question);
        } catch (const GatewayError& e) {
            out[i].error = e.what();
        }
    });
    return out;
}

std::string first_error(const std::vector<QueryOutcome>& outcomes) {
    for (const auto& o : outcomes) {
        if (!o.error.empty()) return o.error;
    }
    return "no successful evaluations";
}

BranchVerdict verify_binary_branch(Branch branch, ModelGateway& gateway,
                                   const std::string& subject, const std::string& question,
                                   const VariantImages& shared, const DetectionConfig& cfg) {
    BranchVerdict v;
    v.branch = branch;
    const auto outcomes = ask_each_variant(gateway, shared, question, cfg.parallelism);
    BinaryTally tally;
    tally.subject = subject;
    for (const auto& o : outcomes) {
        if (o.attempted) ++tally.queries;
        if (!o.result) continue;
        const bool yes = o.result->says_yes();
        tally.answers.push_back(yes);
        tally.scores.push_back(presence_probability(*o.result));
        if (yes) ++tally.yes;
    }
    v.query_count = tally.queries;
    const auto evaluated = tally.answers.size();
    if (evaluated < min_successes(outcomes.size())) {
        v.status = RunStatus::Incomplete;
        v.failure = first_error(outcomes);
    } else {
        tally.degraded = evaluated < outcomes.size();
        if (tally.degraded) v.status = RunStatus::Degraded;
        // Strict majority; an even split is not a trigger.
        v.triggered = static_cast<std::size_t>(tally.yes) * 2 > evaluated;
    }
    v.tally = std::move(tally);
    return v;
}

}  // namespace

BranchVerdict verify_object_branch(ModelGateway& gateway, const DeviationSet& dev,
                                   const VariantImages& shared, const DetectionConfig& cfg) {
    BranchVerdict v;
    v.branch = Branch::Object;
    if (!dev.has_object_deviation()) return v;

    std::vector<std::pair<std::string, DeviationKind>> suspects;
    for (const auto& o : dev.new_objects) suspects.emplace_back(o, DeviationKind::New);
    for (const auto& o : dev.lost_objects) suspects.emplace_back(o, DeviationKind::Lost);

    const std::size_t n = shared.images.size();
    std::vector<QueryOutcome> outcomes(suspects.size() * n);
    parallel_for(outcomes.size(), cfg.parallelism, [&](std::size_t idx) {
        const auto s = idx / n;
        const auto i = idx % n;
        auto& out = outcomes[idx];
        if (!shared.images[i]) {
            out.error = shared.errors[i];
            return;
        }
        out.attempted = true;
        try {
            out.result = gateway.vlm_binary_query(
                *shared.images[i], prompts::object_presence_question(suspects[s].first));
        } catch (const GatewayError& e) {
            out.error = e.what();
        }
    });

    bool degraded = false;
    for (std::size_t s = 0; s < suspects.size(); ++s) {
        StabilityRecord rec;
        rec.label = suspects[s].first;
        rec.kind = suspects[s].second;
        std::vector<QueryOutcome> mine(outcomes.begin() + static_cast<std::ptrdiff_t>(s * n),
                                       outcomes.begin() + static_cast<std::ptrdiff_t>((s + 1) * n));
        for (const auto& o : mine) {
            if (o.attempted) ++rec.queries;
            if (o.result) rec.per_variant_scores.push_back(presence_probability(*o.result));
        }
        v.query_count += rec.queries;
        if (rec.per_variant_scores.size() < min_successes(n)) {
            v.status = RunStatus::Incomplete;
            if (v.failure.empty()) v.failure = rec.label + ": " + first_error(mine);
            continue;
        }
        rec.degraded = rec.per_variant_scores.size() < n;
        degraded = degraded || rec.degraded;
        rec.aggregate = rec.kind == DeviationKind::New ? stability_new(rec.per_variant_scores)
                                                       : stability_lost(rec.per_variant_scores);
        v.records.push_back(std::move(rec));
    }
    if (degraded && v.status == RunStatus::Complete) v.status = RunStatus::Degraded;
    v.s_final = final_stability(v.records);
    v.triggered = v.s_final && *v.s_final > cfg.tau;
    return v;
}

BranchVerdict verify_patch_branch(ModelGateway& gateway, const DeviationSet& dev,
                                  const VariantImages& shared, const DetectionConfig& cfg) {
    if (!dev.patch_deviation) {
        BranchVerdict v;
        v.branch = Branch::Patch;
        return v;
    }
    return verify_binary_branch(Branch::Patch, gateway, "patch",
                                std::string(prompts::kPatchQuestion), shared, cfg);
}

BranchVerdict verify_style_branch(ModelGateway& gateway, const DeviationSet& dev,
                                  const VariantImages& shared, const DetectionConfig& cfg) {
    if (!dev.style_deviation) {
        BranchVerdict v;
        v.branch = Branch::Style;
        return v;
    }
    return verify_binary_branch(Branch::Style, gateway, *dev.style_deviation,
                                prompts::style_presence_question(*dev.style_deviation), shared,
                                cfg);
}

BranchVerdict verify_object_branch(ModelGateway& gateway, const DeviationSet& dev,
                                   std::string_view prompt, const DetectionConfig& cfg) {
    cfg.validate();
    if (!dev.has_object_deviation()) return verify_object_branch(gateway, dev, VariantImages{}, cfg);
    return verify_object_branch(gateway, dev, generate_variants(gateway, prompt, dev, cfg), cfg);
}

BranchVerdict verify_patch_branch(ModelGateway& gateway, const DeviationSet& dev,
                                  std::string_view prompt, const DetectionConfig& cfg) {
    cfg.validate();
    if (!dev.patch_deviation) return verify_patch_branch(gateway, dev, VariantImages{}, cfg);
    return verify_patch_branch(gateway, dev, generate_variants(gateway, prompt, dev, cfg), cfg);
}

BranchVerdict verify_style_branch(ModelGateway& gateway, const DeviationSet& dev,
                                  std::string_view prompt, const DetectionConfig& cfg) {
    cfg.validate();
    if (!dev.style_deviation) return verify_style_branch(gateway, dev, VariantImages{}, cfg);
    return verify_style_branch(gateway, dev, generate_variants(gateway, prompt, dev, cfg), cfg);
}

DetectionVerdict detect(ModelGateway& gateway, std::string_view prompt,
                        const DetectionConfig& cfg) {
    cfg.validate();
    if (trim(prompt).empty()) throw EmptyPrompt();
    const auto started = std::chrono::steady_clock::now();

    DetectionVerdict verdict;
    verdict.prompt = std::string(prompt);
    verdict.branches[0].branch = Branch::Object;
    verdict.branches[1].branch = Branch::Patch;
    verdict.branches[2].branch = Branch::Style;

    const auto finish = [&] {
        verdict.timing_ms = std::chrono::duration_cast<std::chrono::milliseconds>(
                                std::chrono::steady_clock::now() - started)
                                .count();
    };

    try {
        verdict.match = run_mirror_match(gateway, prompt, cfg);
    } catch (const GatewayError& e) {
        verdict.status = RunStatus::Incomplete;
        verdict.failure_stage = "match";
        verdict.failure_detail = e.what();
        for (auto& b : verdict.branches) b.status = RunStatus::Incomplete;
        finish();
        return verdict;
    }

    const auto& dev = verdict.match->deviations;
    VariantImages shared;
    if (dev.any()) {
        shared = generate_variants(gateway, prompt, dev, cfg);
        verdict.variants = shared.variants;
        verdict.variant_images = shared.images;
    }
    verdict.branches[0] = verify_object_branch(gateway, dev, shared, cfg);
    verdict.branches[1] = verify_patch_branch(gateway, dev, shared, cfg);
    verdict.branches[2] = verify_style_branch(gateway, dev, shared, cfg);

    for (const auto& b : verdict.branches) {
        verdict.query_count_m += b.query_count;
        verdict.backdoor_flag = verdict.backdoor_flag || b.triggered;
        if (b.status == RunStatus::Incomplete) {
            verdict.status = RunStatus::Incomplete;
            if (verdict.failure_stage.empty()) {
                verdict.failure_stage = std::string(to_string(b.branch));
                verdict.failure_detail = b.failure;
            }
        } else if (b.status == RunStatus::Degraded && verdict.status == RunStatus::Complete) {
            verdict.status = RunStatus::Degraded;
        }
    }
    finish();
    return verdict;
}

}  // namespace blackmirror
