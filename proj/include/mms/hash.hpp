#pragma once

#include <cstdint>
#include <string>
#include <string_view>

namespace mms {

// 64-bit FNV-1a. Used for record ids and feature hashing; stable across
// platforms and runs.
constexpr std::uint64_t fnv1a64(std::string_view data) {
    std::uint64_t h = 0xcbf29ce484222325ull;
    for (unsigned char c : data) {
        h ^= static_cast<std::uint64_t>(c);
        h *= 0x100000001b3ull;
    }
    return h;
}

std::string hex64(std::uint64_t value);

} // namespace mms
