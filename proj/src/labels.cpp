// Copyright (C) 2026 The BlackMirror Authors
// SPDX-License-Identifier: Apache-2.0

#include "blackmirror/labels.hpp"

#include <algorithm>
#include <cctype>
#include <unordered_set>

namespace blackmirror {

std::string to_lower(std::string_view s) {
    std::string out(s);
    std::transform(out.begin(), out.end(), out.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return out;
}

std::string trim(std::string_view s) {
    const auto is_space = [](unsigned char c) { return std::isspace(c) != 0; };
    std::size_t b = 0;
    std::size_t e = s.size();
    while (b < e && is_space(static_cast<unsigned char>(s[b]))) ++b;
    while (e > b && is_space(static_cast<unsigned char>(s[e - 1]))) --e;
    return std::string(s.substr(b, e - b));
}

std::string collapse_whitespace(std::string_view s) {
    std::string out;
    out.reserve(s.size());
    bool pending_space = false;
    for (char c : s) {
        if (std::isspace(static_cast<unsigned char>(c))) {
            pending_space = !out.empty();
            continue;
        }
        if (pending_space) out.push_back(' ');
        pending_space = false;
        out.push_back(c);
    }
    return out;
}

bool is_word_char(char c) noexcept {
    const auto u = static_cast<unsigned char>(c);
    // Bytes >= 0x80 belong to multi-byte UTF-8 sequences; treat them as
    // word characters so non-ASCII words are not split in the middle.
    return std::isalnum(u) != 0 || u >= 0x80;
}

std::string normalize_label(std::string_view raw) {
    std::string s = collapse_whitespace(to_lower(trim(raw)));
    const auto strip = [](char c) {
        return c == '"' || c == '\'' || c == '`' || c == '.' || c == ';' || c == ':' ||
               c == '[' || c == ']' || c == '(' || c == ')' || c == '*' || c == ' ';
    };
    std::size_t b = 0;
    std::size_t e = s.size();
    while (b < e && strip(s[b])) ++b;
    while (e > b && strip(s[e - 1])) --e;
    return s.substr(b, e - b);
}

std::vector<std::string> normalize_labels(const std::vector<std::string>& raw) {
    std::vector<std::string> out;
    std::unordered_set<std::string> seen;
    for (const auto& r : raw) {
        auto n = normalize_label(r);
        if (n.empty() || !seen.insert(n).second) continue;
        out.push_back(std::move(n));
    }
    return out;
}

std::vector<std::string> parse_comma_list(std::string_view answer) {
    std::vector<std::string> parts;
    std::size_t start = 0;
    while (start <= answer.size()) {
        auto pos = answer.find_first_of(",\n", start);
        if (pos == std::string_view::npos) pos = answer.size();
        parts.emplace_back(answer.substr(start, pos - start));
        start = pos + 1;
    }
    return normalize_labels(parts);
}

std::optional<std::size_t> find_whole_word(std::string_view haystack, std::string_view needle,
                                           std::size_t from) {
    if (needle.empty() || haystack.size() < needle.size()) return std::nullopt;
    const std::string hay = to_lower(haystack);
    const std::string pat = to_lower(needle);
    auto pos = hay.find(pat, from);
    while (pos != std::string::npos) {
        const bool left_ok = pos == 0 || !is_word_char(hay[pos - 1]) || !is_word_char(pat.front());
        const std::size_t end = pos + pat.size();
        const bool right_ok =
            end == hay.size() || !is_word_char(hay[end]) || !is_word_char(pat.back());
        if (left_ok && right_ok) return pos;
        pos = hay.find(pat, pos + 1);
    }
    return std::nullopt;
}

bool contains_whole_word(std::string_view haystack, std::string_view needle) {
    return find_whole_word(haystack, needle).has_value();
}

}  // namespace blackmirror
