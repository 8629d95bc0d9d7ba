// Copyright (C) 2026 The BlackMirror Authors
// SPDX-License-Identifier: Apache-2.0

#include "blackmirror/gateway.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <thread>

#include "blackmirror/error.hpp"
#include "blackmirror/labels.hpp"
#include "blackmirror/prompts.hpp"

namespace blackmirror {

std::string_view to_string(Role role) noexcept {
    switch (role) {
        case Role::T2I: return "t2i";
        case Role::VLM: return "vlm";
        case Role::LLM: return "llm";
        case Role::Embed: return "embed";
    }
    return "t2i";
}

Role role_from_string(std::string_view s) {
    const auto l = to_lower(s);
    if (l == "t2i") return Role::T2I;
    if (l == "vlm") return Role::VLM;
    if (l == "llm") return Role::LLM;
    if (l == "embed") return Role::Embed;
    throw InvalidArgument("unknown endpoint role '" + std::string(s) + "'");
}

json default_vlm_params() {
    return {{"max_new_tokens", 50}, {"num_beams", 1},       {"do_sample", true},
            {"temperature", 0.7},   {"top_p", 0.9},         {"repetition_penalty", 1.0},
            {"num_return_sequences", 5}};
}

json default_llm_params() {
    return {{"max_new_tokens", 128},
            {"do_sample", false},
            {"temperature", 0.0},
            {"repetition_penalty", 1.1}};
}

void EndpointConfig::validate() const {
    if (timeout_ms <= 0) throw InvalidArgument("timeout_ms must be positive");
    if (max_parallel < 1) throw InvalidArgument("max_parallel must be at least 1");
    if (max_retries < 0) throw InvalidArgument("max_retries must be non-negative");
    if (retry_backoff_ms < 0) throw InvalidArgument("retry_backoff_ms must be non-negative");
    if (!params.is_object()) throw InvalidArgument("endpoint params must be a JSON object");
}

EndpointConfig EndpointConfig::defaults_for(Role role) {
    EndpointConfig cfg;
    cfg.role = role;
    if (role == Role::VLM) cfg.params = default_vlm_params();
    if (role == Role::LLM) cfg.params = default_llm_params();
    return cfg;
}

namespace {

void require_role(const EndpointConfig& cfg, Role expected) {
    if (cfg.role != expected) {
        throw InvalidArgument("endpoint configured with role '" + std::string(to_string(cfg.role)) +
                              "' used as '" + std::string(to_string(expected)) + "'");
    }
}

std::string require_string(const json& body, const char* key, const char* what) {
    if (!body.is_object() || !body.contains(key) || !body[key].is_string()) {
        throw ProtocolError(std::string(what) + ": response lacks string field '" + key + "'");
    }
    return body[key].get<std::string>();
}

std::vector<double> parse_vector(const json& body) {
    if (!body.is_object() || !body.contains("vector") || !body["vector"].is_array()) {
        throw ProtocolError("embed: response lacks 'vector' array");
    }
    std::vector<double> v;
    for (const auto& x : body["vector"]) {
        if (!x.is_number()) throw ProtocolError("embed: non-numeric vector entry");
        v.push_back(x.get<double>());
    }
    return v;
}

}  // namespace

std::optional<bool> parse_yes_no(std::string_view text) {
    const auto n = normalize_label(text);
    const auto word_end = std::find_if(n.begin(), n.end(), [](char c) { return !is_word_char(c); });
    const std::string first(n.begin(), word_end);
    if (first == "yes") return true;
    if (first == "no") return false;
    return std::nullopt;
}

std::optional<bool> parse_boolean_answer(std::string_view text) {
    const auto n = normalize_label(text);
    const auto word_end = std::find_if(n.begin(), n.end(), [](char c) { return !is_word_char(c); });
    const std::string first(n.begin(), word_end);
    if (first == "true") return true;
    if (first == "false") return false;
    return std::nullopt;
}

std::optional<ExtractionResult> parse_extraction_answer(std::string_view text) {
    const auto open = text.find('{');
    const auto close = text.rfind('}');
    if (open == std::string_view::npos || close == std::string_view::npos || close < open) {
        return std::nullopt;
    }
    const json doc = json::parse(text.substr(open, close - open + 1), nullptr, false);
    if (doc.is_discarded() || !doc.is_object()) return std::nullopt;

    ExtractionResult out;
    if (!doc.contains("objects") || !doc["objects"].is_array()) return std::nullopt;
    std::vector<std::string> raw;
    for (const auto& o : doc["objects"]) {
        if (!o.is_string()) return std::nullopt;
        raw.push_back(o.get<std::string>());
    }
    out.objects = normalize_labels(raw);

    if (doc.contains("style") && !doc["style"].is_null()) {
        if (!doc["style"].is_string()) return std::nullopt;
        auto s = normalize_label(doc["style"].get<std::string>());
        if (!s.empty() && s != "none" && s != "null") out.style = std::move(s);
    }
    if (doc.contains("insert_patch")) {
        const auto& p = doc["insert_patch"];
        if (p.is_boolean()) {
            out.insert_patch = p.get<bool>();
        } else if (p.is_string()) {
            auto b = parse_boolean_answer(p.get<std::string>());
            if (!b) return std::nullopt;
            out.insert_patch = *b;
        } else if (!p.is_null()) {
            return std::nullopt;
        }
    }
    return out;
}

ModelGateway::ModelGateway(GatewayEndpoints endpoints, GatewayTransports transports,
                           std::shared_ptr<ResponseCache> cache)
    : endpoints_(std::move(endpoints)), cache_(std::move(cache)) {
    if (!cache_) cache_ = std::make_shared<ResponseCache>(CacheMode::Live);
    require_role(endpoints_.t2i, Role::T2I);
    require_role(endpoints_.vlm, Role::VLM);
    require_role(endpoints_.llm, Role::LLM);
    require_role(endpoints_.embed, Role::Embed);

    const auto init = [](Endpoint& ep, const EndpointConfig& cfg, std::shared_ptr<Transport> t) {
        cfg.validate();
        ep.config = cfg;
        ep.transport = std::move(t);
        ep.slots = std::make_unique<std::counting_semaphore<>>(cfg.max_parallel);
    };
    init(t2i_, endpoints_.t2i, transports.t2i);
    init(vlm_, endpoints_.vlm, transports.vlm);
    init(llm_, endpoints_.llm, transports.llm);
    init(embed_, endpoints_.embed, transports.embed);
}

ModelGateway::Endpoint& ModelGateway::endpoint(Role role) {
    switch (role) {
        case Role::T2I: return t2i_;
        case Role::VLM: return vlm_;
        case Role::LLM: return llm_;
        case Role::Embed: return embed_;
    }
    return t2i_;
}

json ModelGateway::transport_with_retries(Endpoint& ep, const std::string& path, const json& body) {
    if (!ep.transport) {
        throw RetryExhausted("no transport configured for role '" +
                             std::string(to_string(ep.config.role)) + "'");
    }
    std::string last_error;
    for (int attempt = 0; attempt <= ep.config.max_retries; ++attempt) {
        if (attempt > 0 && ep.config.retry_backoff_ms > 0) {
            const auto delay = ep.config.retry_backoff_ms * (1 << std::min(attempt - 1, 6));
            std::this_thread::sleep_for(std::chrono::milliseconds(delay));
        }
        ep.slots->acquire();
        try {
            ep.transport_calls.fetch_add(1);
            json out = ep.transport->post(path, body);
            ep.slots->release();
            return out;
        } catch (const TransportError& e) {
            ep.slots->release();
            last_error = e.what();
        } catch (...) {
            ep.slots->release();
            throw;
        }
    }
    throw RetryExhausted(std::string(to_string(ep.config.role)) + " " + path + " failed after " +
                         std::to_string(ep.config.max_retries + 1) + " attempts: " + last_error);
}

json ModelGateway::cached_call(Role role, const std::string& path, const json& body) {
    Endpoint& ep = endpoint(role);
    ep.requests.fetch_add(1);
    const auto digest = request_digest(path, body);
    if (auto hit = cache_->lookup(role, digest)) {
        ep.cache_hits.fetch_add(1);
        return *hit;
    }
    if (cache_->mode() == CacheMode::Replay) throw ReplayMiss(digest);
    json response = transport_with_retries(ep, path, body);
    cache_->store(role, digest, json{{"path", path}, {"body", body}}, response);
    return response;
}

ImageHandle ModelGateway::generate_image(std::string_view prompt, std::uint64_t seed) {
    if (trim(prompt).empty()) throw EmptyPrompt();
    const json body = {{"prompt", std::string(prompt)}, {"seed", seed}};
    const json out = cached_call(Role::T2I, "/v1/generate", body);
    auto id = require_string(out, "image_id", "generate");
    if (id.empty()) throw ProtocolError("generate: empty image_id");
    return ImageHandle{std::move(id), std::string(prompt), seed};
}

std::vector<std::string> ModelGateway::vlm_describe(const ImageHandle& image,
                                                    std::string_view question, int samples) {
    if (samples < 1) throw InvalidArgument("samples must be at least 1");
    const auto& params = vlm_.config.params;
    const json body = {{"image_id", image.id},
                       {"question", std::string(question)},
                       {"samples", samples},
                       {"temperature", params.value("temperature", 0.7)},
                       {"top_p", params.value("top_p", 0.9)}};
    const json out = cached_call(Role::VLM, "/v1/vlm/describe", body);
    if (!out.is_object() || !out.contains("answers") || !out["answers"].is_array()) {
        throw ProtocolError("describe: response lacks 'answers' array");
    }
    std::vector<std::string> answers;
    for (const auto& a : out["answers"]) {
        if (!a.is_string()) throw ProtocolError("describe: non-string answer");
        answers.push_back(a.get<std::string>());
    }
    if (answers.size() != static_cast<std::size_t>(samples)) {
        throw ProtocolError("describe: expected " + std::to_string(samples) + " answers, got " +
                            std::to_string(answers.size()));
    }
    return answers;
}

std::vector<std::string> ModelGateway::vlm_list_objects(const ImageHandle& image) {
    return parse_comma_list(vlm_describe(image, prompts::kListObjects, 1).front());
}

BinaryQueryResult ModelGateway::vlm_binary_query(const ImageHandle& image,
                                                 std::string_view question) {
    if (!trim(question).ends_with(prompts::kStrictYesNoTail)) {
        throw InvalidArgument("binary question must end with '" +
                              std::string(prompts::kStrictYesNoTail) + "'");
    }
    const json body = {{"image_id", image.id},
                       {"question", std::string(question)},
                       {"answer_tokens", json::array({"yes", "no"})}};
    const json out = cached_call(Role::VLM, "/v1/vlm/query", body);
    if (out.is_object() && out.contains("logits")) {
        const auto& l = out["logits"];
        if (!l.is_object() || !l.contains("yes") || !l.contains("no") || !l["yes"].is_number() ||
            !l["no"].is_number()) {
            throw ProtocolError("query: malformed logits");
        }
        BinaryQueryResult r{l["yes"].get<double>(), l["no"].get<double>(), false};
        if (!std::isfinite(r.l_yes) || !std::isfinite(r.l_no)) {
            throw ProtocolError("query: non-finite logits");
        }
        return r;
    }
    if (out.is_object() && out.contains("text") && out["text"].is_string()) {
        const auto yes = parse_yes_no(out["text"].get<std::string>());
        if (!yes) throw ProtocolError("query: text answer is neither yes nor no");
        return *yes ? BinaryQueryResult{kFallbackLogit, -kFallbackLogit, true}
                    : BinaryQueryResult{-kFallbackLogit, kFallbackLogit, true};
    }
    throw ProtocolError("query: response has neither logits nor text");
}

std::string ModelGateway::llm_complete(const std::string& prompt) {
    const json body = {{"prompt", prompt}, {"params", llm_.config.params}};
    const json out = cached_call(Role::LLM, "/v1/llm/complete", body);
    return require_string(out, "text", "complete");
}

ExtractionResult ModelGateway::llm_extract_patterns(std::string_view prompt) {
    if (trim(prompt).empty()) throw EmptyPrompt();
    const auto request = prompts::extraction_prompt(prompt);
    if (auto r = parse_extraction_answer(llm_complete(request))) return *r;
    const auto retry = request + "\n" + std::string(prompts::kExtractionReprompt);
    if (auto r = parse_extraction_answer(llm_complete(retry))) return *r;
    throw ProtocolError("extract: no valid JSON object after reprompt");
}

bool ModelGateway::llm_same_concept(std::string_view a_raw, std::string_view b_raw) {
    auto a = normalize_label(a_raw);
    auto b = normalize_label(b_raw);
    if (a == b) return true;
    if (b < a) std::swap(a, b);
    const auto key = std::make_pair(a, b);
    {
        std::lock_guard lock(memo_mu_);
        if (auto it = concept_memo_.find(key); it != concept_memo_.end()) return it->second;
    }
    const auto request = prompts::same_concept_prompt(a, b);
    auto answer = parse_boolean_answer(llm_complete(request));
    if (!answer) {
        answer = parse_boolean_answer(
            llm_complete(request + "\n" + std::string(prompts::kBooleanReprompt)));
    }
    if (!answer) throw ProtocolError("same_concept: answer is neither TRUE nor FALSE");
    std::lock_guard lock(memo_mu_);
    return concept_memo_.emplace(key, *answer).first->second;
}

bool ModelGateway::llm_styles_differ(std::string_view prompt_style_raw,
                                     std::string_view image_style_raw) {
    const auto prompt_style = normalize_label(prompt_style_raw);
    const auto image_style = normalize_label(image_style_raw);
    if (prompt_style == image_style) return false;
    const auto key = std::make_pair(prompt_style, image_style);
    {
        std::lock_guard lock(memo_mu_);
        if (auto it = style_memo_.find(key); it != style_memo_.end()) return it->second;
    }
    const auto request = prompts::style_difference_prompt(prompt_style, image_style);
    auto answer = parse_boolean_answer(llm_complete(request));
    if (!answer) {
        answer = parse_boolean_answer(
            llm_complete(request + "\n" + std::string(prompts::kBooleanReprompt)));
    }
    if (!answer) throw ProtocolError("style comparison: answer is neither TRUE nor FALSE");
    std::lock_guard lock(memo_mu_);
    return style_memo_.emplace(key, *answer).first->second;
}

std::vector<double> ModelGateway::embed_text(std::string_view text) {
    return parse_vector(cached_call(Role::Embed, "/v1/embed", {{"text", std::string(text)}}));
}

std::vector<double> ModelGateway::embed_image(const ImageHandle& image) {
    return parse_vector(cached_call(Role::Embed, "/v1/embed", {{"image_id", image.id}}));
}

GatewayStats ModelGateway::stats() const {
    const auto snap = [](const Endpoint& ep) {
        return EndpointStats{ep.requests.load(), ep.transport_calls.load(), ep.cache_hits.load()};
    };
    return GatewayStats{snap(t2i_), snap(vlm_), snap(llm_), snap(embed_)};
}

}  // namespace blackmirror
