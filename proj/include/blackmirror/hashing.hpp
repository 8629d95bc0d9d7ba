// Copyright (C) 2026 The BlackMirror Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <string>
#include <string_view>

namespace blackmirror {

/// FNV-1a, 64 bit. Stable across platforms and runs.
std::uint64_t stable_hash(std::string_view bytes) noexcept;

/// SplitMix64 finalizer applied to the combination of two words.
std::uint64_t mix(std::uint64_t a, std::uint64_t b) noexcept;

inline std::uint64_t mix(std::uint64_t a, std::string_view b) noexcept {
    return mix(a, stable_hash(b));
}

/// Maps 64 random bits to [0, 1) with 53-bit resolution.
inline double unit_double(std::uint64_t bits) noexcept {
    return static_cast<double>(bits >> 11) * 0x1.0p-53;
}

/// Small counter-based generator. Portable, so seeded simulations replay
/// identically everywhere.
class SplitMix64 {
public:
    explicit SplitMix64(std::uint64_t seed) noexcept : state_(seed) {}

    std::uint64_t next() noexcept;
    double uniform() noexcept { return unit_double(next()); }
    bool bernoulli(double p) noexcept { return uniform() < p; }
    /// Uniform integer in [0, bound). bound must be > 0.
    std::uint64_t below(std::uint64_t bound) noexcept { return next() % bound; }

private:
    std::uint64_t state_;
};

/// Lowercase hex SHA-256 of `bytes`.
std::string sha256_hex(std::string_view bytes);

std::string hex64(std::uint64_t v);

}  // namespace blackmirror
