// Copyright (C) 2026 The BlackMirror Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <optional>
#include <string>
#include <string_view>

#include <json.hpp>

namespace blackmirror {

using nlohmann::json;

enum class Role { T2I, VLM, LLM, Embed };

std::string_view to_string(Role role) noexcept;
Role role_from_string(std::string_view s);

/// Connection settings for one remote capability.
struct EndpointConfig {
    std::string base_url;
    Role role = Role::T2I;
    int timeout_ms = 60000;
    int max_retries = 2;
    int max_parallel = 4;
    int retry_backoff_ms = 50;
    std::optional<std::string> auth_token;
    /// Decoding parameters forwarded with VLM/LLM requests.
    json params = json::object();

    /// Throws InvalidArgument when an invariant is violated.
    void validate() const;

    static EndpointConfig defaults_for(Role role);
};

/// VLM sampling defaults (max_new_tokens 50, temperature 0.7, top_p 0.9,
/// five return sequences).
json default_vlm_params();
/// Greedy LLM decoding (temperature 0, no sampling, 128 new tokens).
json default_llm_params();

/// One request/response exchange with a model server. Implementations throw
/// TransportError for retryable failures and ProtocolError for bad bodies.
class Transport {
public:
    virtual ~Transport() = default;
    virtual json post(const std::string& path, const json& body) = 0;
};

}  // namespace blackmirror
