// Copyright (C) 2026 The BlackMirror Authors
// SPDX-License-Identifier: Apache-2.0

#include "blackmirror/sim_server.hpp"

#include <httplib.h>

#include "blackmirror/error.hpp"

namespace blackmirror::sim {

struct SimHttpServer::Impl {
    httplib::Server server;
};

SimHttpServer::SimHttpServer(std::shared_ptr<SimBackend> backend)
    : impl_(std::make_unique<Impl>()), backend_(std::move(backend)) {
    const auto handler = [this](const httplib::Request& req, httplib::Response& res) {
        served_.fetch_add(1);
        const json body = json::parse(req.body, nullptr, false);
        if (body.is_discarded()) {
            res.status = 400;
            res.set_content(R"({"error":"body is not JSON"})", "application/json");
            return;
        }
        try {
            res.set_content(backend_->handle(req.path, body).dump(), "application/json");
        } catch (const ProtocolError& e) {
            res.status = 400;
            res.set_content(json{{"error", e.what()}}.dump(), "application/json");
        } catch (const std::exception& e) {
            res.status = 500;
            res.set_content(json{{"error", e.what()}}.dump(), "application/json");
        }
    };
    for (const char* route :
         {"/v1/generate", "/v1/vlm/describe", "/v1/vlm/query", "/v1/llm/complete", "/v1/embed"}) {
        impl_->server.Post(route, handler);
    }
}

SimHttpServer::~SimHttpServer() { stop(); }

int SimHttpServer::start(const std::string& host, int port) {
    host_ = host;
    if (port == 0) {
        port_ = impl_->server.bind_to_any_port(host);
    } else {
        if (!impl_->server.bind_to_port(host, port)) port_ = -1;
        else port_ = port;
    }
    if (port_ <= 0) throw Error("could not bind sim server on " + host);
    thread_ = std::thread([this] { impl_->server.listen_after_bind(); });
    impl_->server.wait_until_ready();
    return port_;
}

void SimHttpServer::serve_forever(const std::string& host, int port) {
    host_ = host;
    port_ = port;
    if (!impl_->server.listen(host, port)) throw Error("could not listen on " + base_url());
}

void SimHttpServer::stop() {
    impl_->server.stop();
    if (thread_.joinable()) thread_.join();
}

std::string SimHttpServer::base_url() const {
    return "http://" + host_ + ":" + std::to_string(port_);
}

}  // namespace blackmirror::sim
