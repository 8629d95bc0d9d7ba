// Copyright (C) 2026 The BlackMirror Authors
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include "blackmirror/error.hpp"
#include "blackmirror/http_transport.hpp"
#include "blackmirror/mirror_verify.hpp"
#include "blackmirror/serialize.hpp"
#include "blackmirror/sim_server.hpp"
#include "test_support.hpp"

using namespace blackmirror;

namespace {

GatewayEndpoints endpoints_at(const std::string& url) {
    auto eps = bmtest::fast_endpoints();
    for (auto* ep : {&eps.t2i, &eps.vlm, &eps.llm, &eps.embed}) {
        ep->base_url = url;
        ep->timeout_ms = 5000;
    }
    return eps;
}

GatewayTransports http_transports(const GatewayEndpoints& eps) {
    return {std::make_shared<HttpTransport>(eps.t2i), std::make_shared<HttpTransport>(eps.vlm),
            std::make_shared<HttpTransport>(eps.llm), std::make_shared<HttpTransport>(eps.embed)};
}

}  // namespace

TEST(Http, DetectOverServedSimulator) {
    sim::SimHttpServer server(std::make_shared<sim::SimBackend>(sim::SimConfig::noiseless({bmtest::dog_to_cat()})));
    server.start();
    const auto eps = endpoints_at(server.base_url());
    ModelGateway gw(eps, http_transports(eps), nullptr);
    const auto v = detect(gw, "zz a dog under a bench", DetectionConfig{});
    EXPECT_TRUE(v.backdoor_flag);
    EXPECT_GT(server.requests_served(), 0u);
    EXPECT_EQ(server.requests_served(), gw.stats().transport_calls());
}

TEST(Http, ClientErrorsAreProtocolErrors) {
    sim::SimHttpServer server(std::make_shared<sim::SimBackend>(sim::SimConfig::noiseless()));
    server.start();
    HttpTransport t(endpoints_at(server.base_url()).vlm);
    EXPECT_THROW(t.post("/v1/vlm/query", {{"image_id", "img-missing"}, {"question", "q"}}), ProtocolError);
}

TEST(Http, UnreachableServerExhaustsRetries) {
    int port = 0;
    {
        sim::SimHttpServer probe(std::make_shared<sim::SimBackend>(sim::SimConfig::noiseless()));
        port = probe.start();
    }
    const auto eps = endpoints_at("http://127.0.0.1:" + std::to_string(port));
    ModelGateway gw(eps, http_transports(eps), nullptr);
    EXPECT_THROW(gw.generate_image("a dog", 1), RetryExhausted);
}

TEST(Http, BaseUrlWithPathPrefix) {
    EndpointConfig cfg = EndpointConfig::defaults_for(Role::T2I);
    cfg.base_url = "not a url";
    EXPECT_THROW(HttpTransport{cfg}, InvalidArgument);
}

TEST(Http, RecordingReplaysInProcess) {
    bmtest::TempDir dir;
    std::string recorded;
    {
        sim::SimHttpServer server(std::make_shared<sim::SimBackend>(sim::SimConfig::noiseless({bmtest::dog_to_cat()})));
        server.start();
        const auto eps = endpoints_at(server.base_url());
        ModelGateway gw(eps, http_transports(eps), std::make_shared<ResponseCache>(CacheMode::Record, dir.path()));
        recorded = to_json(detect(gw, "zz a dog under a bench", DetectionConfig{})).dump();
    }
    ModelGateway replay(bmtest::fast_endpoints(), GatewayTransports{},
                        std::make_shared<ResponseCache>(CacheMode::Replay, dir.path()));
    EXPECT_EQ(to_json(detect(replay, "zz a dog under a bench", DetectionConfig{})).dump(), recorded);
    EXPECT_EQ(replay.stats().transport_calls(), 0u);
}
