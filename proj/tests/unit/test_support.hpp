// Copyright (C) 2026 The BlackMirror Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <atomic>
#include <filesystem>
#include <functional>
#include <memory>
#include <random>
#include <string>

#include "blackmirror/cache.hpp"
#include "blackmirror/gateway.hpp"
#include "blackmirror/sim_world.hpp"

namespace bmtest {

using blackmirror::json;

class FakeTransport : public blackmirror::Transport {
public:
    using Handler = std::function<json(const std::string&, const json&)>;
    explicit FakeTransport(Handler h) : handler_(std::move(h)) {}

    json post(const std::string& path, const json& body) override {
        calls.fetch_add(1);
        return handler_(path, body);
    }

    std::atomic<int> calls{0};

private:
    Handler handler_;
};

class TempDir {
public:
    TempDir() {
        std::random_device rd;
        path_ = std::filesystem::temp_directory_path() /
                ("bm-test-" + std::to_string(rd()) + "-" + std::to_string(rd()));
        std::filesystem::create_directories(path_);
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path_, ec);
    }
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;

    const std::filesystem::path& path() const { return path_; }

private:
    std::filesystem::path path_;
};

inline blackmirror::GatewayEndpoints fast_endpoints() {
    blackmirror::GatewayEndpoints eps;
    for (auto* ep : {&eps.t2i, &eps.vlm, &eps.llm, &eps.embed}) ep->retry_backoff_ms = 0;
    return eps;
}

inline std::unique_ptr<blackmirror::ModelGateway> gateway_over(
    std::shared_ptr<blackmirror::Transport> t,
    std::shared_ptr<blackmirror::ResponseCache> cache = nullptr) {
    return std::make_unique<blackmirror::ModelGateway>(
        fast_endpoints(), blackmirror::GatewayTransports::shared(std::move(t)), std::move(cache));
}

/// In-process simulator plus a live-mode gateway over it.
struct SimRig {
    explicit SimRig(blackmirror::sim::SimConfig cfg)
        : backend(std::make_shared<blackmirror::sim::SimBackend>(std::move(cfg))),
          gateway(gateway_over(std::make_shared<blackmirror::sim::SimTransport>(backend))) {}

    std::shared_ptr<blackmirror::sim::SimBackend> backend;
    std::unique_ptr<blackmirror::ModelGateway> gateway;
};

inline blackmirror::sim::BackdoorRule dog_to_cat() {
    return blackmirror::sim::BackdoorRule::object_replacement("zz", "dog", "cat");
}

}  // namespace bmtest
