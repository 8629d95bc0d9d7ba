// Copyright (C) 2026 The BlackMirror Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <filesystem>
#include <memory>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "blackmirror/cache.hpp"
#include "blackmirror/eval_harness.hpp"
#include "blackmirror/gateway.hpp"
#include "blackmirror/mirror_verify.hpp"
#include "blackmirror/sim_world.hpp"

namespace blackmirror {

enum class Backend { Sim, Http };

std::string_view to_string(Backend b) noexcept;
Backend backend_from_string(std::string_view s);

/// Everything a detect or eval invocation needs, after defaults, the config
/// file and command-line flags were merged (in that order of precedence).
struct AppConfig {
    DetectionConfig detection;
    Backend backend = Backend::Sim;
    CacheMode cache_mode = CacheMode::Live;
    std::string cache_dir = ".blackmirror/cache";
    std::string state_dir = ".blackmirror";
    std::string reports_dir = "reports";
    GatewayEndpoints endpoints;
    /// Backdoor rules shared by the simulator and dataset synthesis.
    std::vector<sim::BackdoorRule> rules;
    sim::SimConfig sim;
    EvalConfig eval;
    bool emit_timing = false;

    /// Copies the shared fields (rules, detection, timing) into the
    /// simulator and evaluation sections, then validates everything.
    void resolve();
};

/// Rules for a named attack family: objrep (dog to cat), patch, style
/// (black-and-white) or fiximg (a cat with a latte).
std::vector<sim::BackdoorRule> attack_preset(std::string_view family, const std::string& trigger = "zz");

AppConfig default_app_config();

/// Overlays a JSON document on `base`. Unknown keys throw InvalidArgument.
void apply_config_json(AppConfig& base, const nlohmann::json& doc);
AppConfig load_app_config(const std::filesystem::path& path);

/// Resolved snapshot; feeding it back through apply_config_json
/// reproduces the same configuration.
nlohmann::json to_json(const AppConfig& cfg);

struct GatewayBundle {
    std::shared_ptr<sim::SimBackend> sim_backend;
    std::shared_ptr<ResponseCache> cache;
    std::unique_ptr<ModelGateway> gateway;
};

/// Wires transports and the response cache. Replay mode installs no
/// transport at all, so a replayed run cannot reach the network.
GatewayBundle make_gateway(const AppConfig& cfg);

}  // namespace blackmirror
