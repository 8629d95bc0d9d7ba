// Copyright (C) 2026 The BlackMirror Authors
// SPDX-License-Identifier: Apache-2.0

#include "blackmirror/config.hpp"

#include <fstream>
#include <set>

#include "blackmirror/error.hpp"
#include "blackmirror/http_transport.hpp"
#include "blackmirror/labels.hpp"
#include "blackmirror/serialize.hpp"

namespace blackmirror {

using nlohmann::json;

namespace {

void reject_unknown(const json& obj, const std::set<std::string>& known, const std::string& where) {
    for (const auto& [key, _] : obj.items()) {
        if (!known.count(key)) throw InvalidArgument("unknown config key '" + where + key + "'");
    }
}

template <typename T>
void read(const json& obj, const char* key, T& out) {
    if (!obj.contains(key) || obj[key].is_null()) return;
    try {
        out = obj[key].get<T>();
    } catch (const json::exception& e) {
        throw InvalidArgument(std::string("config key '") + key + "': " + e.what());
    }
}

const json& require_object(const json& j, const std::string& where) {
    if (!j.is_object()) throw InvalidArgument("config section '" + where + "' must be an object");
    return j;
}

sim::BackdoorRule rule_from_json(const json& j) {
    require_object(j, "rules[]");
    reject_unknown(j, {"trigger", "attack", "clean_label", "target", "fixed_objects"}, "rules[].");
    sim::BackdoorRule r;
    read(j, "trigger", r.trigger);
    std::string attack = "objrep";
    read(j, "attack", attack);
    r.attack = sim::attack_kind_from_string(attack);
    if (j.contains("clean_label") && !j["clean_label"].is_null()) {
        r.clean_label = j["clean_label"].get<std::string>();
    }
    read(j, "target", r.target);
    read(j, "fixed_objects", r.fixed_objects);
    r.validate();
    return r;
}

json rule_to_json(const sim::BackdoorRule& r) {
    return {{"trigger", r.trigger},
            {"attack", std::string(sim::to_string(r.attack))},
            {"clean_label", r.clean_label ? json(*r.clean_label) : json(nullptr)},
            {"target", r.target},
            {"fixed_objects", r.fixed_objects}};
}

void apply_endpoint(EndpointConfig& ep, const json& j, const std::string& where) {
    require_object(j, where);
    reject_unknown(j,
                   {"base_url", "timeout_ms", "max_retries", "max_parallel", "retry_backoff_ms",
                    "auth_token", "params"},
                   where + ".");
    read(j, "base_url", ep.base_url);
    read(j, "timeout_ms", ep.timeout_ms);
    read(j, "max_retries", ep.max_retries);
    read(j, "max_parallel", ep.max_parallel);
    read(j, "retry_backoff_ms", ep.retry_backoff_ms);
    if (j.contains("auth_token") && !j["auth_token"].is_null()) {
        ep.auth_token = j["auth_token"].get<std::string>();
    }
    if (j.contains("params")) {
        require_object(j["params"], where + ".params");
        ep.params.update(j["params"]);
    }
}

json endpoint_to_json(const EndpointConfig& ep) {
    // Tokens are secrets and never written back out.
    return {{"base_url", ep.base_url},
            {"timeout_ms", ep.timeout_ms},
            {"max_retries", ep.max_retries},
            {"max_parallel", ep.max_parallel},
            {"retry_backoff_ms", ep.retry_backoff_ms},
            {"params", ep.params}};
}

}  // namespace

std::string_view to_string(Backend b) noexcept { return b == Backend::Sim ? "sim" : "http"; }

Backend backend_from_string(std::string_view s) {
    const auto t = to_lower(trim(s));
    if (t == "sim") return Backend::Sim;
    if (t == "http") return Backend::Http;
    throw InvalidArgument("unknown backend '" + std::string(s) + "' (expected sim or http)");
}

std::vector<sim::BackdoorRule> attack_preset(std::string_view family, const std::string& trigger) {
    const auto f = to_lower(trim(family));
    if (f == "objrep") return {sim::BackdoorRule::object_replacement(trigger, "dog", "cat")};
    if (f == "patch") return {sim::BackdoorRule::patch_insertion(trigger, "logo")};
    if (f == "style") return {sim::BackdoorRule::style_injection(trigger, "black-and-white")};
    if (f == "fiximg") return {sim::BackdoorRule::fixed_image(trigger, "latte_cat", {"cat", "latte"})};
    throw InvalidArgument("unknown attack family '" + std::string(family) + "'");
}

AppConfig default_app_config() {
    AppConfig cfg;
    cfg.rules = attack_preset("objrep");
    cfg.resolve();
    return cfg;
}

void AppConfig::resolve() {
    sim.rules = rules;
    eval.rules = rules;
    eval.detection = detection;
    eval.emit_timing = emit_timing;
    detection.validate();
    sim.validate();
    eval.validate();
    for (const auto* ep : {&endpoints.t2i, &endpoints.vlm, &endpoints.llm, &endpoints.embed}) {
        ep->validate();
    }
    if (backend == Backend::Http && cache_mode != CacheMode::Replay) {
        for (const auto* ep : {&endpoints.t2i, &endpoints.vlm, &endpoints.llm, &endpoints.embed}) {
            if (ep->base_url.empty()) {
                throw InvalidArgument("http backend needs a base_url for the " +
                                      std::string(blackmirror::to_string(ep->role)) + " endpoint");
            }
        }
    }
}

void apply_config_json(AppConfig& cfg, const json& doc) {
    require_object(doc, "<root>");
    reject_unknown(doc,
                   {"schema", "K", "N", "tau", "rng_seed", "parallelism", "backend", "cache",
                    "cache_dir", "state_dir", "reports_dir", "emit_timing", "attack", "trigger",
                    "rules", "base_url", "endpoints", "sim", "eval"},
                   "");
    read(doc, "K", cfg.detection.K);
    read(doc, "N", cfg.detection.N);
    read(doc, "tau", cfg.detection.tau);
    read(doc, "rng_seed", cfg.detection.rng_seed);
    read(doc, "parallelism", cfg.detection.parallelism);
    if (doc.contains("backend")) cfg.backend = backend_from_string(doc["backend"].get<std::string>());
    if (doc.contains("cache")) cfg.cache_mode = cache_mode_from_string(doc["cache"].get<std::string>());
    read(doc, "cache_dir", cfg.cache_dir);
    read(doc, "state_dir", cfg.state_dir);
    read(doc, "reports_dir", cfg.reports_dir);
    read(doc, "emit_timing", cfg.emit_timing);

    if (doc.contains("attack")) {
        std::string trigger = "zz";
        read(doc, "trigger", trigger);
        cfg.rules = attack_preset(doc["attack"].get<std::string>(), trigger);
    }
    if (doc.contains("rules")) {
        if (!doc["rules"].is_array()) throw InvalidArgument("config key 'rules' must be an array");
        cfg.rules.clear();
        for (const auto& r : doc["rules"]) cfg.rules.push_back(rule_from_json(r));
    }

    if (doc.contains("base_url")) {
        const auto url = doc["base_url"].get<std::string>();
        for (auto* ep : {&cfg.endpoints.t2i, &cfg.endpoints.vlm, &cfg.endpoints.llm, &cfg.endpoints.embed}) {
            ep->base_url = url;
        }
    }
    if (doc.contains("endpoints")) {
        const auto& eps = require_object(doc["endpoints"], "endpoints");
        reject_unknown(eps, {"t2i", "vlm", "llm", "embed"}, "endpoints.");
        if (eps.contains("t2i")) apply_endpoint(cfg.endpoints.t2i, eps["t2i"], "endpoints.t2i");
        if (eps.contains("vlm")) apply_endpoint(cfg.endpoints.vlm, eps["vlm"], "endpoints.vlm");
        if (eps.contains("llm")) apply_endpoint(cfg.endpoints.llm, eps["llm"], "endpoints.llm");
        if (eps.contains("embed")) apply_endpoint(cfg.endpoints.embed, eps["embed"], "endpoints.embed");
    }

    if (doc.contains("sim")) {
        const auto& s = require_object(doc["sim"], "sim");
        reject_unknown(s,
                       {"bias_probability", "bias_vocabulary", "vlm_miss_rate",
                        "vlm_hallucination_rate", "hallucination_vocabulary", "vlm_flip_rate",
                        "logit_scale", "presence_confidence", "vlm_text_only", "master_seed",
                        "embedding_dim", "noiseless"},
                       "sim.");
        if (s.value("noiseless", false)) cfg.sim = sim::SimConfig::noiseless();
        read(s, "bias_probability", cfg.sim.bias_probability);
        read(s, "bias_vocabulary", cfg.sim.bias_vocabulary);
        read(s, "vlm_miss_rate", cfg.sim.vlm_miss_rate);
        read(s, "vlm_hallucination_rate", cfg.sim.vlm_hallucination_rate);
        read(s, "hallucination_vocabulary", cfg.sim.hallucination_vocabulary);
        read(s, "vlm_flip_rate", cfg.sim.vlm_flip_rate);
        read(s, "logit_scale", cfg.sim.logit_scale);
        if (s.contains("presence_confidence")) {
            if (s["presence_confidence"].is_null()) cfg.sim.presence_confidence.reset();
            else cfg.sim.presence_confidence = s["presence_confidence"].get<double>();
        }
        read(s, "vlm_text_only", cfg.sim.vlm_text_only);
        read(s, "master_seed", cfg.sim.master_seed);
        read(s, "embedding_dim", cfg.sim.embedding_dim);
    }

    if (doc.contains("eval")) {
        const auto& e = require_object(doc["eval"], "eval");
        reject_unknown(e,
                       {"n", "trigger_rate", "seed", "min_objects", "max_objects", "variants",
                        "sweep", "calibration_n", "ufid_percentile", "clipd_percentile",
                        "sample_parallelism"},
                       "eval.");
        read(e, "n", cfg.eval.n);
        read(e, "trigger_rate", cfg.eval.trigger_rate);
        read(e, "seed", cfg.eval.dataset_seed);
        read(e, "min_objects", cfg.eval.dataset_options.min_objects);
        read(e, "max_objects", cfg.eval.dataset_options.max_objects);
        if (e.contains("variants")) {
            cfg.eval.variants.clear();
            for (const auto& v : e["variants"]) {
                cfg.eval.variants.push_back(detector_variant_from_string(v.get<std::string>()));
            }
        }
        if (e.contains("sweep")) cfg.eval.sweep = sweep_axis_from_string(e["sweep"].get<std::string>());
        read(e, "calibration_n", cfg.eval.calibration_n);
        read(e, "ufid_percentile", cfg.eval.ufid_percentile);
        read(e, "clipd_percentile", cfg.eval.clipd_percentile);
        read(e, "sample_parallelism", cfg.eval.sample_parallelism);
    }
    cfg.resolve();
}

AppConfig load_app_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw InvalidArgument("cannot open config file " + path.string());
    const json doc = json::parse(in, nullptr, false);
    if (doc.is_discarded()) throw InvalidArgument("config file " + path.string() + " is not valid JSON");
    AppConfig cfg = default_app_config();
    apply_config_json(cfg, doc);
    return cfg;
}

json to_json(const AppConfig& cfg) {
    json rules = json::array();
    for (const auto& r : cfg.rules) rules.push_back(rule_to_json(r));
    json variants = json::array();
    for (auto v : cfg.eval.variants) variants.push_back(std::string(to_string(v)));
    const auto& s = cfg.sim;
    return {
        {"schema", std::string(kSchemaVersion)},
        {"K", cfg.detection.K},
        {"N", cfg.detection.N},
        {"tau", cfg.detection.tau},
        {"rng_seed", cfg.detection.rng_seed},
        {"parallelism", cfg.detection.parallelism},
        {"backend", std::string(to_string(cfg.backend))},
        {"cache", std::string(to_string(cfg.cache_mode))},
        {"cache_dir", cfg.cache_dir},
        {"state_dir", cfg.state_dir},
        {"reports_dir", cfg.reports_dir},
        {"emit_timing", cfg.emit_timing},
        {"rules", rules},
        {"endpoints",
         {{"t2i", endpoint_to_json(cfg.endpoints.t2i)},
          {"vlm", endpoint_to_json(cfg.endpoints.vlm)},
          {"llm", endpoint_to_json(cfg.endpoints.llm)},
          {"embed", endpoint_to_json(cfg.endpoints.embed)}}},
        {"sim",
         {{"bias_probability", s.bias_probability},
          {"bias_vocabulary", s.bias_vocabulary},
          {"vlm_miss_rate", s.vlm_miss_rate},
          {"vlm_hallucination_rate", s.vlm_hallucination_rate},
          {"hallucination_vocabulary", s.hallucination_vocabulary},
          {"vlm_flip_rate", s.vlm_flip_rate},
          {"logit_scale", s.logit_scale},
          {"presence_confidence", s.presence_confidence ? json(*s.presence_confidence) : json(nullptr)},
          {"vlm_text_only", s.vlm_text_only},
          {"master_seed", s.master_seed},
          {"embedding_dim", s.embedding_dim}}},
        {"eval",
         {{"n", cfg.eval.n},
          {"trigger_rate", cfg.eval.trigger_rate},
          {"seed", cfg.eval.dataset_seed},
          {"min_objects", cfg.eval.dataset_options.min_objects},
          {"max_objects", cfg.eval.dataset_options.max_objects},
          {"variants", variants},
          {"sweep", std::string(to_string(cfg.eval.sweep))},
          {"calibration_n", cfg.eval.calibration_n},
          {"ufid_percentile", cfg.eval.ufid_percentile},
          {"clipd_percentile", cfg.eval.clipd_percentile},
          {"sample_parallelism", cfg.eval.sample_parallelism}}}};
}

GatewayBundle make_gateway(const AppConfig& cfg) {
    GatewayBundle b;
    if (cfg.cache_mode == CacheMode::Live) {
        b.cache = std::make_shared<ResponseCache>(CacheMode::Live);
    } else {
        b.cache = std::make_shared<ResponseCache>(cfg.cache_mode, std::filesystem::path(cfg.cache_dir));
    }
    GatewayTransports transports;
    if (cfg.cache_mode != CacheMode::Replay) {
        if (cfg.backend == Backend::Sim) {
            b.sim_backend = std::make_shared<sim::SimBackend>(cfg.sim);
            transports = GatewayTransports::shared(std::make_shared<sim::SimTransport>(b.sim_backend));
        } else {
            transports.t2i = std::make_shared<HttpTransport>(cfg.endpoints.t2i);
            transports.vlm = std::make_shared<HttpTransport>(cfg.endpoints.vlm);
            transports.llm = std::make_shared<HttpTransport>(cfg.endpoints.llm);
            transports.embed = std::make_shared<HttpTransport>(cfg.endpoints.embed);
        }
    }
    b.gateway = std::make_unique<ModelGateway>(cfg.endpoints, transports, b.cache);
    return b;
}

}  // namespace blackmirror
