#pragma once

#include <charconv>
#include <cstdint>
#include <string>
#include <system_error>

namespace gwi {

// Shortest round-trip decimal form; identical bytes for identical values.
inline std::string format_double(double x) {
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof buf, x);
    return std::string(buf, res.ptr);
}

// FNV-1a, used to fingerprint configurations in output headers.
inline std::uint64_t fnv1a(const std::string& text) noexcept {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : text) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

inline std::string hex64(std::uint64_t x) {
    char buf[17];
    const auto res = std::to_chars(buf, buf + sizeof buf, x, 16);
    std::string s(buf, res.ptr);
    return std::string(16 - s.size(), '0') + s;
}

}  // namespace gwi
