// Copyright (C) 2026 The BlackMirror Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <string_view>

#include <json.hpp>

#include "blackmirror/mirror_match.hpp"
#include "blackmirror/mirror_verify.hpp"

namespace blackmirror {

/// Version tag carried by every verdict and report document.
inline constexpr std::string_view kSchemaVersion = "blackmirror/v1";

struct VerdictJsonOptions {
    /// Wall-clock timing differs between otherwise identical runs, so it is
    /// only emitted on request.
    bool include_timing = false;
};

nlohmann::json to_json(const PatternSet& p);
nlohmann::json to_json(const DeviationSet& d);
nlohmann::json to_json(const PromptVariant& v);
nlohmann::json to_json(const StabilityRecord& r);
nlohmann::json to_json(const BranchVerdict& b);
nlohmann::json to_json(const DetectionVerdict& v, const VerdictJsonOptions& opts = {});

/// Flag the serialized verdict yields at object threshold `tau`.
bool verdict_json_flag_at(const nlohmann::json& verdict, double tau);

}  // namespace blackmirror
