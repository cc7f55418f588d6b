#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "hearthguard/error.hpp"

namespace hearthguard::meshbus {

inline std::vector<std::string_view> split_levels(std::string_view s) {
    std::vector<std::string_view> out;
    std::size_t start = 0;
    for (;;) {
        const auto slash = s.find('/', start);
        out.push_back(s.substr(start, slash == std::string_view::npos ? std::string_view::npos : slash - start));
        if (slash == std::string_view::npos) break;
        start = slash + 1;
    }
    return out;
}

/// Publish topics: non-empty levels, no wildcards.
inline void validate_topic(std::string_view topic) {
    if (topic.empty()) throw InvalidTopic("empty topic");
    for (auto level : split_levels(topic)) {
        if (level.empty()) throw InvalidTopic("empty level in '" + std::string(topic) + "'");
        if (level.find_first_of("+#") != std::string_view::npos)
            throw InvalidTopic("wildcard in publish topic '" + std::string(topic) + "'");
    }
}

/// Filters: '+' as a whole level, '#' only as the whole last level.
inline void validate_filter(std::string_view filter) {
    if (filter.empty()) throw InvalidFilter("empty filter");
    const auto levels = split_levels(filter);
    for (std::size_t i = 0; i < levels.size(); ++i) {
        const auto level = levels[i];
        if (level.empty()) throw InvalidFilter("empty level in '" + std::string(filter) + "'");
        if (level == "#") {
            if (i + 1 != levels.size()) throw InvalidFilter("'#' must be the last level");
            continue;
        }
        if (level == "+") continue;
        if (level.find_first_of("+#") != std::string_view::npos)
            throw InvalidFilter("wildcard must occupy a whole level in '" + std::string(filter) + "'");
    }
}

inline bool valid_topic(std::string_view t) {
    try {
        validate_topic(t);
        return true;
    } catch (const Error&) {
        return false;
    }
}

/// Level-wise match; '#' also matches the parent level itself ("a/#" matches "a").
inline bool matches(std::string_view filter, std::string_view topic) {
    validate_filter(filter);
    const auto f = split_levels(filter);
    const auto t = split_levels(topic);
    std::size_t i = 0;
    for (; i < f.size(); ++i) {
        if (f[i] == "#") return true;
        if (i >= t.size()) return false;
        if (f[i] != "+" && f[i] != t[i]) return false;
    }
    return i == t.size();
}

}  // namespace hearthguard::meshbus
