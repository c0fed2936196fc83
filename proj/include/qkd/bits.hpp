#pragma once

#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <vector>

namespace qkd {

// Bit sequences are held one byte per bit (values 0/1): keys at desk scale
// are small and this keeps indexing, diffing and slicing trivial. Packed
// MSB-first form is used on the wire and on disk.
using Bits = std::vector<uint8_t>;

std::vector<uint8_t> pack_bits(const Bits& bits);
Bits unpack_bits(const std::vector<uint8_t>& bytes, size_t bit_count);

size_t hamming_distance(const Bits& a, const Bits& b);

enum class Party : uint8_t { Alice = 0, Bob = 1 };

inline const char* party_name(Party p) {
    return p == Party::Alice ? "Alice" : "Bob";
}

// Where a key sits in the pipeline. Only corrected keys may feed the
// one-time pad by default.
enum class KeyStage : uint8_t { Raw = 0, Sifted = 1, Corrected = 2 };

inline const char* key_stage_name(KeyStage s) {
    switch (s) {
        case KeyStage::Raw: return "raw";
        case KeyStage::Sifted: return "sifted";
        case KeyStage::Corrected: return "corrected";
    }
    return "?";
}

struct BitKey {
    Bits bits;
    KeyStage stage = KeyStage::Raw;
    Party party = Party::Alice;

    size_t size() const { return bits.size(); }
    bool empty() const { return bits.empty(); }
};

}  // namespace qkd
