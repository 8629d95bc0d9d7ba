// Copyright (C) 2026 The BlackMirror Authors
// SPDX-License-Identifier: Apache-2.0

#include "blackmirror/cache.hpp"

#include <atomic>
#include <chrono>
#include <ctime>
#include <fstream>
#include <sstream>
#include <system_error>
#include <thread>

#include "blackmirror/error.hpp"
#include "blackmirror/hashing.hpp"

namespace blackmirror {

namespace fs = std::filesystem;

std::string_view to_string(CacheMode mode) noexcept {
    switch (mode) {
        case CacheMode::Live: return "live";
        case CacheMode::Record: return "record";
        case CacheMode::Replay: return "replay";
    }
    return "live";
}

CacheMode cache_mode_from_string(std::string_view s) {
    if (s == "live") return CacheMode::Live;
    if (s == "record") return CacheMode::Record;
    if (s == "replay") return CacheMode::Replay;
    throw InvalidArgument("unknown cache mode '" + std::string(s) + "'");
}

std::string canonical_json(const json& value) {
    // nlohmann::json stores objects in a std::map, so keys are already sorted.
    return value.dump(-1, ' ', false, json::error_handler_t::replace);
}

std::string request_digest(std::string_view path, const json& body) {
    json request = {{"body", body}, {"path", std::string(path)}};
    return sha256_hex(canonical_json(request));
}

namespace {

std::string utc_timestamp() {
    const auto now = std::chrono::system_clock::now();
    const std::time_t t = std::chrono::system_clock::to_time_t(now);
    std::tm tm{};
    gmtime_r(&t, &tm);
    char buf[32];
    std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

std::string memory_key(Role role, const std::string& digest) {
    return std::string(to_string(role)) + "/" + digest;
}

}  // namespace

ResponseCache::ResponseCache(CacheMode mode, std::optional<fs::path> dir)
    : mode_(mode), dir_(std::move(dir)) {
    if (mode_ != CacheMode::Live && !dir_) {
        throw InvalidArgument("record and replay cache modes need a cache directory");
    }
}

fs::path ResponseCache::entry_path(Role role, const std::string& digest) const {
    if (!dir_) throw InvalidArgument("cache has no directory");
    return *dir_ / std::string(to_string(role)) / (digest + ".json");
}

std::optional<json> ResponseCache::lookup(Role role, const std::string& digest) {
    const auto key = memory_key(role, digest);
    {
        std::lock_guard lock(mu_);
        if (auto it = memory_.find(key); it != memory_.end()) return it->second;
    }
    if (mode_ == CacheMode::Live) return std::nullopt;

    const auto path = entry_path(role, digest);
    std::ifstream in(path, std::ios::binary);
    if (!in) return std::nullopt;
    json entry;
    try {
        entry = json::parse(in);
    } catch (const json::exception& e) {
        throw ProtocolError("corrupt cache entry " + path.string() + ": " + e.what());
    }
    if (!entry.contains("response")) {
        throw ProtocolError("cache entry without response: " + path.string());
    }
    std::lock_guard lock(mu_);
    auto [it, inserted] = memory_.emplace(key, entry["response"]);
    return it->second;
}

void ResponseCache::store(Role role, const std::string& digest, const json& request,
                          const json& response) {
    {
        std::lock_guard lock(mu_);
        memory_.emplace(memory_key(role, digest), response);
    }
    if (mode_ != CacheMode::Record) return;

    const auto path = entry_path(role, digest);
    std::error_code ec;
    if (fs::exists(path, ec)) return;
    fs::create_directories(path.parent_path());

    static std::atomic<unsigned> counter{0};
    std::ostringstream tmp_name;
    tmp_name << digest << ".tmp." << std::hash<std::thread::id>{}(std::this_thread::get_id()) << '.'
             << counter.fetch_add(1);
    const auto tmp = path.parent_path() / tmp_name.str();
    {
        json entry = {{"request", request},
                      {"request_digest", digest},
                      {"response", response},
                      {"created_at", utc_timestamp()}};
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        out << entry.dump(2, ' ', false, json::error_handler_t::replace) << '\n';
        if (!out) throw Error("failed writing cache entry " + tmp.string());
    }
    // Hard-linking fails when the target exists, which gives first-writer-wins.
    fs::create_hard_link(tmp, path, ec);
    fs::remove(tmp);
}

}  // namespace blackmirror
