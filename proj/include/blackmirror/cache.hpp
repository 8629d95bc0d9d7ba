// Copyright (C) 2026 The BlackMirror Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <filesystem>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>

#include "blackmirror/endpoint.hpp"

namespace blackmirror {

/// Live: in-memory memoization only. Record: read-through and write-back to
/// the cache directory. Replay: answer from memory or disk, never transport.
enum class CacheMode { Live, Record, Replay };

std::string_view to_string(CacheMode mode) noexcept;
CacheMode cache_mode_from_string(std::string_view s);

/// Compact dump with lexicographically sorted keys.
std::string canonical_json(const json& value);

/// SHA-256 over the canonical form of {"path": ..., "body": ...}.
std::string request_digest(std::string_view path, const json& body);

/// Content-addressed response store laid out as <dir>/<role>/<digest>.json.
/// Entries are immutable once written; concurrent inserts of the same digest
/// keep the first writer's file.
class ResponseCache {
public:
    explicit ResponseCache(CacheMode mode, std::optional<std::filesystem::path> dir = std::nullopt);

    CacheMode mode() const noexcept { return mode_; }
    const std::optional<std::filesystem::path>& directory() const noexcept { return dir_; }

    std::optional<json> lookup(Role role, const std::string& digest);
    void store(Role role, const std::string& digest, const json& request, const json& response);

    std::filesystem::path entry_path(Role role, const std::string& digest) const;

private:
    CacheMode mode_;
    std::optional<std::filesystem::path> dir_;
    std::mutex mu_;
    std::unordered_map<std::string, json> memory_;
};

}  // namespace blackmirror
