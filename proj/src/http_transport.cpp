// Copyright (C) 2026 The BlackMirror Authors
// SPDX-License-Identifier: Apache-2.0

#include "blackmirror/http_transport.hpp"

#include <cstdlib>
#include <mutex>

#include <httplib.h>

#include "blackmirror/error.hpp"

namespace blackmirror {

struct HttpTransport::Impl {
    std::string host;
    std::string prefix;
    std::optional<std::string> token;
    int timeout_ms = 0;
};

HttpTransport::HttpTransport(const EndpointConfig& cfg) : impl_(std::make_unique<Impl>()) {
    cfg.validate();
    if (cfg.base_url.empty()) throw InvalidArgument("HTTP endpoint needs a base_url");
    // Plain HTTP only; TLS is expected to terminate in front of the model servers.
    if (!cfg.base_url.starts_with("http://") || cfg.base_url.size() <= 7) {
        throw InvalidArgument("base_url must look like http://host[:port][/prefix], got '" +
                              cfg.base_url + "'");
    }
    const std::size_t host_start = 7;
    const auto path_start = cfg.base_url.find('/', host_start);
    impl_->host = cfg.base_url.substr(0, path_start);
    if (path_start != std::string::npos) {
        impl_->prefix = cfg.base_url.substr(path_start);
        while (!impl_->prefix.empty() && impl_->prefix.back() == '/') impl_->prefix.pop_back();
    }
    impl_->timeout_ms = cfg.timeout_ms;
    impl_->token = cfg.auth_token;
    if (!impl_->token) {
        if (const char* env = std::getenv(kAuthTokenEnv); env != nullptr && *env != '\0') {
            impl_->token = env;
        }
    }
}

HttpTransport::~HttpTransport() = default;

json HttpTransport::post(const std::string& path, const json& body) {
    // One client per call keeps the transport safe for concurrent use.
    httplib::Client client(impl_->host);
    const auto secs = impl_->timeout_ms / 1000;
    const auto usecs = (impl_->timeout_ms % 1000) * 1000;
    client.set_connection_timeout(secs, usecs);
    client.set_read_timeout(secs, usecs);
    client.set_write_timeout(secs, usecs);
    httplib::Headers headers;
    if (impl_->token) headers.emplace("Authorization", "Bearer " + *impl_->token);

    const auto res = client.Post(impl_->prefix + path, headers, body.dump(), "application/json");
    if (!res) {
        throw TransportError("POST " + path + ": " + httplib::to_string(res.error()));
    }
    if (res->status >= 500) {
        throw TransportError("POST " + path + ": HTTP " + std::to_string(res->status));
    }
    if (res->status >= 400) {
        throw ProtocolError("POST " + path + ": HTTP " + std::to_string(res->status) + " " +
                            res->body);
    }
    json out = json::parse(res->body, nullptr, false);
    if (out.is_discarded()) throw ProtocolError("POST " + path + ": body is not JSON");
    return out;
}

}  // namespace blackmirror
