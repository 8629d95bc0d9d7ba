// Copyright (C) 2026 The BlackMirror Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

namespace blackmirror {

using LabelSet = std::set<std::string>;

/// Lowercases, trims, collapses inner whitespace and strips wrapping
/// quotes/punctuation. Returns an empty string for blank input.
std::string normalize_label(std::string_view raw);

/// Normalizes every entry, drops empties and keeps first occurrences only.
std::vector<std::string> normalize_labels(const std::vector<std::string>& raw);

/// Splits a comma-separated VLM answer into normalized, deduplicated labels.
std::vector<std::string> parse_comma_list(std::string_view answer);

std::string to_lower(std::string_view s);
std::string trim(std::string_view s);
std::string collapse_whitespace(std::string_view s);

bool is_word_char(char c) noexcept;

/// Case-insensitive search for `needle` as a whole word (bounded by
/// non-alphanumeric characters or the string ends). Returns the byte
/// offset of the first match at or after `from`.
std::optional<std::size_t> find_whole_word(std::string_view haystack, std::string_view needle,
                                           std::size_t from = 0);

bool contains_whole_word(std::string_view haystack, std::string_view needle);

}  // namespace blackmirror
