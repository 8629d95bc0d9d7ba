// Copyright (C) 2026 The BlackMirror Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <atomic>
#include <cstdint>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <semaphore>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "blackmirror/cache.hpp"
#include "blackmirror/endpoint.hpp"

namespace blackmirror {

/// A generated image as seen by the detector. Value type; the id is the
/// only thing the remote side needs.
struct ImageHandle {
    std::string id;
    std::string origin_prompt;
    std::uint64_t seed = 0;

    friend bool operator==(const ImageHandle&, const ImageHandle&) = default;
};

/// Raw logits of the first answer token restricted to {yes, no}.
struct BinaryQueryResult {
    double l_yes = 0.0;
    double l_no = 0.0;
    /// True when the endpoint answered in text and the logits are the
    /// synthetic +/-kFallbackLogit pair.
    bool from_text = false;

    bool says_yes() const noexcept { return l_yes > l_no; }
};

inline constexpr double kFallbackLogit = 10.0;

struct ExtractionResult {
    std::vector<std::string> objects;
    std::optional<std::string> style;
    bool insert_patch = false;
};

struct EndpointStats {
    std::uint64_t requests = 0;
    std::uint64_t transport_calls = 0;
    std::uint64_t cache_hits = 0;
};

struct GatewayStats {
    EndpointStats t2i, vlm, llm, embed;

    std::uint64_t transport_calls() const noexcept {
        return t2i.transport_calls + vlm.transport_calls + llm.transport_calls +
               embed.transport_calls;
    }
};

struct GatewayEndpoints {
    EndpointConfig t2i = EndpointConfig::defaults_for(Role::T2I);
    EndpointConfig vlm = EndpointConfig::defaults_for(Role::VLM);
    EndpointConfig llm = EndpointConfig::defaults_for(Role::LLM);
    EndpointConfig embed = EndpointConfig::defaults_for(Role::Embed);
};

struct GatewayTransports {
    std::shared_ptr<Transport> t2i, vlm, llm, embed;

    /// All four roles served by one transport (the in-process simulator, or a
    /// single server exposing every route).
    static GatewayTransports shared(std::shared_ptr<Transport> t) { return {t, t, t, t}; }
};

/// Uniform client for the three model capabilities (plus optional
/// embeddings). Every remote exchange goes through cached_call(), so a warm
/// cache replays a run without touching the network. Thread-safe; each
/// endpoint admits at most max_parallel in-flight transport calls.
class ModelGateway {
public:
    ModelGateway(GatewayEndpoints endpoints, GatewayTransports transports,
                 std::shared_ptr<ResponseCache> cache);

    ModelGateway(const ModelGateway&) = delete;
    ModelGateway& operator=(const ModelGateway&) = delete;

    ImageHandle generate_image(std::string_view prompt, std::uint64_t seed);

    /// One sample of the VLM object list, normalized.
    std::vector<std::string> vlm_list_objects(const ImageHandle& image);

    /// `samples` raw answers to `question`, requested as one batched call.
    std::vector<std::string> vlm_describe(const ImageHandle& image, std::string_view question,
                                          int samples);

    BinaryQueryResult vlm_binary_query(const ImageHandle& image, std::string_view question);

    ExtractionResult llm_extract_patterns(std::string_view prompt);

    /// Symmetric and memoized; identical labels never reach the endpoint.
    bool llm_same_concept(std::string_view a, std::string_view b);

    /// True when the LLM judges the two styles different.
    bool llm_styles_differ(std::string_view prompt_style, std::string_view image_style);

    std::vector<double> embed_text(std::string_view text);
    std::vector<double> embed_image(const ImageHandle& image);

    json cached_call(Role role, const std::string& path, const json& body);

    GatewayStats stats() const;
    CacheMode cache_mode() const noexcept { return cache_->mode(); }
    const GatewayEndpoints& endpoints() const noexcept { return endpoints_; }

private:
    struct Endpoint {
        EndpointConfig config;
        std::shared_ptr<Transport> transport;
        std::unique_ptr<std::counting_semaphore<>> slots;
        std::atomic<std::uint64_t> requests{0};
        std::atomic<std::uint64_t> transport_calls{0};
        std::atomic<std::uint64_t> cache_hits{0};
    };

    Endpoint& endpoint(Role role);
    json transport_with_retries(Endpoint& ep, const std::string& path, const json& body);
    std::string llm_complete(const std::string& prompt);

    GatewayEndpoints endpoints_;
    std::shared_ptr<ResponseCache> cache_;
    Endpoint t2i_, vlm_, llm_, embed_;

    std::mutex memo_mu_;
    std::map<std::pair<std::string, std::string>, bool> concept_memo_;
    std::map<std::pair<std::string, std::string>, bool> style_memo_;
};

/// Parses an extraction answer (tolerates code fences and surrounding
/// prose). Returns nullopt when no valid object can be recovered.
std::optional<ExtractionResult> parse_extraction_answer(std::string_view text);

/// Parses TRUE/FALSE answers; nullopt for anything else.
std::optional<bool> parse_boolean_answer(std::string_view text);

/// Parses a textual yes/no answer; nullopt for anything else.
std::optional<bool> parse_yes_no(std::string_view text);

}  // namespace blackmirror
