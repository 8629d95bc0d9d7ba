// Copyright (C) 2026 The BlackMirror Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <atomic>
#include <memory>
#include <string>
#include <thread>

#include "blackmirror/sim_world.hpp"

namespace blackmirror::sim {

/// Serves a SimBackend over the JSON/HTTP protocol the gateway speaks.
/// ProtocolError maps to HTTP 400, anything else to 500.
class SimHttpServer {
public:
    explicit SimHttpServer(std::shared_ptr<SimBackend> backend);
    ~SimHttpServer();

    SimHttpServer(const SimHttpServer&) = delete;
    SimHttpServer& operator=(const SimHttpServer&) = delete;

    /// Binds (port 0 picks a free port) and serves on a background thread.
    /// Returns the bound port.
    int start(const std::string& host = "127.0.0.1", int port = 0);

    /// Serves on the calling thread until stop() is called from elsewhere.
    void serve_forever(const std::string& host, int port);

    void stop();

    std::string base_url() const;
    std::uint64_t requests_served() const noexcept { return served_.load(); }

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
    std::shared_ptr<SimBackend> backend_;
    std::thread thread_;
    std::atomic<std::uint64_t> served_{0};
    std::string host_;
    int port_ = 0;
};

}  // namespace blackmirror::sim
