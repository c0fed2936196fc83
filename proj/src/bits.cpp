#include "qkd/bits.hpp"

namespace qkd {

std::vector<uint8_t> pack_bits(const Bits& bits) {
    std::vector<uint8_t> out((bits.size() + 7) / 8, 0);
    for (size_t i = 0; i < bits.size(); ++i) {
        if (bits[i]) {
            out[i / 8] |= static_cast<uint8_t>(0x80u >> (i % 8));
        }
    }
    return out;
}

Bits unpack_bits(const std::vector<uint8_t>& bytes, size_t bit_count) {
    if (bit_count > bytes.size() * 8) {
        throw std::invalid_argument("unpack_bits: bit count exceeds available bytes");
    }
    Bits out(bit_count, 0);
    for (size_t i = 0; i < bit_count; ++i) {
        out[i] = (bytes[i / 8] >> (7 - i % 8)) & 1u;
    }
    return out;
}

size_t hamming_distance(const Bits& a, const Bits& b) {
    if (a.size() != b.size()) {
        throw std::invalid_argument("hamming_distance: length mismatch");
    }
    size_t d = 0;
    for (size_t i = 0; i < a.size(); ++i) {
        d += (a[i] != b[i]) ? 1 : 0;
    }
    return d;
}

}  // namespace qkd
