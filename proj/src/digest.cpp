#include "amlrisk/digest.hpp"

#include <array>

namespace amlrisk {

std::uint64_t fnv1a64(std::string_view bytes) noexcept {
    std::uint64_t hash = 0xcbf29ce484222325ULL;
    for (unsigned char c : bytes) {
        hash ^= c;
        hash *= 0x100000001b3ULL;
    }
    return hash;
}

std::string content_id(std::string_view prefix, std::string_view bytes) {
    static constexpr std::array<char, 16> kHex{'0', '1', '2', '3', '4', '5', '6', '7',
                                               '8', '9', 'a', 'b', 'c', 'd', 'e', 'f'};
    std::uint64_t h = fnv1a64(bytes);
    std::string out(prefix);
    for (int shift = 60; shift >= 0; shift -= 4) {
        out.push_back(kHex[(h >> shift) & 0xF]);
    }
    return out;
}

}  // namespace amlrisk
