// Copyright (C) 2026 The BlackMirror Authors
// SPDX-License-Identifier: Apache-2.0

#include "blackmirror/serialize.hpp"

#include "blackmirror/error.hpp"

namespace blackmirror {

using nlohmann::json;

namespace {

json optional_string(const std::optional<std::string>& s) { return s ? json(*s) : json(nullptr); }

}  // namespace

json to_json(const PatternSet& p) {
    return {{"objects", p.objects},
            {"style", optional_string(p.style)},
            {"patch", p.patch_present},
            {"source", p.source == PatternSource::Instruction ? "instruction" : "response"}};
}

json to_json(const DeviationSet& d) {
    json safe = json::array();
    for (const auto& [ins, res] : d.safe) safe.push_back(json::array({ins, res}));
    return {{"safe", safe},
            {"new", d.new_objects},
            {"lost", d.lost_objects},
            {"style", optional_string(d.style_deviation)},
            {"patch", d.patch_deviation}};
}

json to_json(const PromptVariant& v) {
    return {{"text", v.text}, {"removed", v.removed_labels}, {"seed", v.seed}};
}

json to_json(const StabilityRecord& r) {
    return {{"label", r.label},
            {"kind", std::string(to_string(r.kind))},
            {"scores", r.per_variant_scores},
            {"aggregate", r.aggregate},
            {"degraded", r.degraded},
            {"queries", r.queries}};
}

json to_json(const BranchVerdict& b) {
    json out = {{"branch", std::string(to_string(b.branch))},
                {"triggered", b.triggered},
                {"s_final", b.s_final ? json(*b.s_final) : json(nullptr)},
                {"status", std::string(to_string(b.status))},
                {"query_count", b.query_count}};
    json records = json::array();
    for (const auto& r : b.records) records.push_back(to_json(r));
    out["records"] = records;
    if (b.tally) {
        out["tally"] = {{"subject", b.tally->subject},
                        {"answers", b.tally->answers},
                        {"scores", b.tally->scores},
                        {"yes", b.tally->yes},
                        {"queries", b.tally->queries},
                        {"degraded", b.tally->degraded}};
    } else {
        out["tally"] = nullptr;
    }
    if (!b.failure.empty()) out["failure"] = b.failure;
    return out;
}

json to_json(const DetectionVerdict& v, const VerdictJsonOptions& opts) {
    json out = {{"schema", std::string(kSchemaVersion)},
                {"prompt", v.prompt},
                {"backdoor_flag", v.backdoor_flag},
                {"status", std::string(to_string(v.status))},
                {"query_count_m", v.query_count_m}};
    if (opts.include_timing) out["timing_ms"] = v.timing_ms;
    if (!v.failure_stage.empty()) {
        out["failure"] = {{"stage", v.failure_stage}, {"detail", v.failure_detail}};
    }
    if (v.match) {
        out["match"] = {{"image",
                         {{"id", v.match->image.id},
                          {"origin_prompt", v.match->image.origin_prompt},
                          {"seed", v.match->image.seed}}},
                        {"instruction", to_json(v.match->instruction)},
                        {"response", to_json(v.match->response)},
                        {"deviations", to_json(v.match->deviations)}};
    } else {
        out["match"] = nullptr;
    }
    json variants = json::array();
    for (std::size_t i = 0; i < v.variants.size(); ++i) {
        json entry = to_json(v.variants[i]);
        const bool has_image = i < v.variant_images.size() && v.variant_images[i];
        entry["image_id"] = has_image ? json(v.variant_images[i]->id) : json(nullptr);
        variants.push_back(std::move(entry));
    }
    out["variants"] = variants;
    json branches = json::array();
    for (const auto& b : v.branches) branches.push_back(to_json(b));
    out["branches"] = branches;
    return out;
}

bool verdict_json_flag_at(const json& verdict, double tau) {
    if (!verdict.contains("branches") || !verdict["branches"].is_array()) {
        throw InvalidArgument("verdict JSON lacks branches");
    }
    bool flag = false;
    for (const auto& b : verdict["branches"]) {
        const auto name = b.at("branch").get<std::string>();
        if (name == "object") {
            const auto& s = b.at("s_final");
            flag = flag || (!s.is_null() && s.get<double>() > tau);
        } else {
            flag = flag || b.at("triggered").get<bool>();
        }
    }
    return flag;
}

}  // namespace blackmirror
