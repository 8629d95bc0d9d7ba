// Copyright (C) 2026 The BlackMirror Authors
// SPDX-License-Identifier: Apache-2.0

#include "blackmirror/mirror_match.hpp"

#include <algorithm>
#include <map>

#include "blackmirror/error.hpp"
#include "blackmirror/prompts.hpp"

namespace blackmirror {

namespace {

std::size_t vote_threshold(std::size_t k) { return (k + 1) / 2; }

}  // namespace

LabelSet DeviationSet::safe_instruction_labels() const {
    LabelSet out;
    for (const auto& [ins, res] : safe) out.insert(ins);
    return out;
}

LabelSet majority_vote(const std::vector<LabelSet>& samples) {
    if (samples.empty()) throw InvalidArgument("majority_vote needs at least one sample");
    std::map<std::string, std::size_t> counts;
    for (const auto& s : samples) {
        for (const auto& label : s) ++counts[label];
    }
    LabelSet out;
    const auto need = vote_threshold(samples.size());
    for (const auto& [label, n] : counts) {
        if (n >= need) out.insert(label);
    }
    return out;
}

bool is_sentinel_answer(std::string_view label) {
    return label == "none" || label == "nothing" || label == "n/a";
}

std::optional<std::string> majority_style(const std::vector<std::string>& answers) {
    if (answers.empty()) throw InvalidArgument("majority_style needs at least one sample");
    std::map<std::string, std::size_t> counts;
    for (const auto& a : answers) {
        auto s = normalize_label(a);
        const bool known = std::find(prompts::kStyleVocabulary.begin(),
                                     prompts::kStyleVocabulary.end(),
                                     s) != prompts::kStyleVocabulary.end();
        ++counts[known ? s : std::string("none")];
    }
    std::size_t best = 0;
    std::vector<std::string> leaders;
    for (const auto& [label, n] : counts) {
        if (n > best) {
            best = n;
            leaders = {label};
        } else if (n == best) {
            leaders.push_back(label);
        }
    }
    if (leaders.size() != 1 || best < vote_threshold(answers.size()) || leaders[0] == "none") {
        return std::nullopt;
    }
    return leaders[0];
}

bool majority_yes(const std::vector<std::string>& answers) {
    if (answers.empty()) throw InvalidArgument("majority_yes needs at least one sample");
    std::size_t yes = 0;
    for (const auto& a : answers) {
        if (parse_yes_no(a).value_or(false)) ++yes;
    }
    return yes >= vote_threshold(answers.size());
}

PatternSet extract_response_patterns(ModelGateway& gateway, const ImageHandle& image, int k) {
    if (k < 1) throw InvalidArgument("K must be at least 1");
    PatternSet out;
    out.source = PatternSource::Response;

    std::vector<LabelSet> samples;
    for (const auto& answer : gateway.vlm_describe(image, prompts::kListObjects, k)) {
        LabelSet s;
        for (auto& label : parse_comma_list(answer)) {
            if (!is_sentinel_answer(label)) s.insert(std::move(label));
        }
        samples.push_back(std::move(s));
    }
    out.objects = majority_vote(samples);
    out.style = majority_style(gateway.vlm_describe(image, prompts::kStyleQuestion, k));
    out.patch_present = majority_yes(gateway.vlm_describe(image, prompts::kPatchQuestion, k));
    return out;
}

PatternSet extract_instruction_patterns(ModelGateway& gateway, std::string_view prompt) {
    if (trim(prompt).empty()) throw InvalidArgument("instruction prompt must be non-empty");
    const auto extracted = gateway.llm_extract_patterns(prompt);
    PatternSet out;
    out.source = PatternSource::Instruction;
    out.objects.insert(extracted.objects.begin(), extracted.objects.end());
    out.style = extracted.style;
    out.patch_present = extracted.insert_patch;
    return out;
}

DeviationSet compute_deviations(const PatternSet& ins, const PatternSet& res,
                                const ConceptOracle& same_concept,
                                const StyleOracle& styles_differ) {
    DeviationSet dev;
    LabelSet unmatched_res = res.objects;
    for (const auto& i : ins.objects) {
        auto match = std::find_if(unmatched_res.begin(), unmatched_res.end(),
                                  [&](const std::string& r) { return same_concept(i, r); });
        if (match == unmatched_res.end()) {
            dev.lost_objects.insert(i);
            continue;
        }
        dev.safe.emplace(i, *match);
        unmatched_res.erase(match);
    }
    dev.new_objects = std::move(unmatched_res);

    if (res.style) {
        if (!ins.style || styles_differ(*ins.style, *res.style)) dev.style_deviation = res.style;
    }
    dev.patch_deviation = res.patch_present && !ins.patch_present;
    return dev;
}

DeviationSet compute_deviations(ModelGateway& gateway, const PatternSet& ins,
                                const PatternSet& res) {
    return compute_deviations(
        ins, res,
        [&](const std::string& a, const std::string& b) { return gateway.llm_same_concept(a, b); },
        [&](const std::string& a, const std::string& b) {
            return gateway.llm_styles_differ(a, b);
        });
}

DeviationSet compute_deviations_exact(const PatternSet& ins, const PatternSet& res) {
    return compute_deviations(
        ins, res, [](const std::string& a, const std::string& b) { return a == b; },
        [](const std::string& a, const std::string& b) { return a != b; });
}

}  // namespace blackmirror
