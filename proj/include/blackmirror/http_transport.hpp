// Copyright (C) 2026 The BlackMirror Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <memory>
#include <optional>
#include <string>

#include "blackmirror/endpoint.hpp"

namespace blackmirror {

/// Environment variable consulted when an endpoint has no explicit token.
inline constexpr const char* kAuthTokenEnv = "BLACKMIRROR_AUTH_TOKEN";

/// JSON-over-HTTP transport. Connection errors, timeouts and 5xx replies
/// surface as TransportError; 4xx replies and unparseable bodies as
/// ProtocolError.
class HttpTransport : public Transport {
public:
    explicit HttpTransport(const EndpointConfig& cfg);
    ~HttpTransport() override;

    json post(const std::string& path, const json& body) override;

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

}  // namespace blackmirror
