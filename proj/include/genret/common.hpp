#pragma once
// Shared primitive types and small helpers used across the library.

#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace genret {

using TokenId = std::uint32_t;

// Identifier views of a passage.
enum class View : std::uint8_t { Title = 0, Substring = 1, PseudoQuery = 2 };

inline const char* view_name(View v) {
    switch (v) {
        case View::Title: return "title";
        case View::Substring: return "substring";
        case View::PseudoQuery: return "pseudo_query";
    }
    return "?";
}

inline View view_from_name(std::string_view s) {
    if (s == "title") return View::Title;
    if (s == "substring") return View::Substring;
    if (s == "pseudo_query" || s == "pseudo-query") return View::PseudoQuery;
    throw std::invalid_argument("unknown view: " + std::string(s));
}

// Raised on malformed input data (files, records, ids).
struct DataError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Raised on invalid configuration values.
struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

inline std::uint64_t fnv1a64(std::string_view data, std::uint64_t seed = 0xcbf29ce484222325ull) {
    std::uint64_t h = seed;
    for (unsigned char c : data) {
        h ^= c;
        h *= 0x100000001b3ull;
    }
    return h;
}

inline std::uint64_t fnv1a64_u64(std::uint64_t value, std::uint64_t seed) {
    char buf[8];
    for (int i = 0; i < 8; ++i) buf[i] = char((value >> (8 * i)) & 0xff);
    return fnv1a64(std::string_view(buf, 8), seed);
}

}  // namespace genret
