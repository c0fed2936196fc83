#pragma once

#include <cstdint>
#include <string>

#include "qkd/bits.hpp"

namespace qkd {

// One-time-pad key ledger. Pad bits are consumed front to back; a consumed
// span can never be handed out again, so key reuse is impossible by
// construction. By default only corrected keys are accepted.
class PadLedger {
public:
    explicit PadLedger(BitKey key, bool require_corrected = true);

    size_t spent() const { return spent_; }
    size_t remaining() const { return key_.size() - spent_; }
    const BitKey& key() const { return key_; }

    // XOR data with the next data.size() pad bits. Throws KeyExhaustedError
    // (before consuming anything) if the pad is too short.
    Bits xor_apply(const Bits& data);

    // Same, but addressing an explicit pad offset; offsets inside the spent
    // span throw KeyReuseError. Skipped bits count as spent.
    Bits xor_apply_at(const Bits& data, size_t bit_offset);

private:
    BitKey key_;
    size_t spent_ = 0;
};

// Row-major 1-bit image; bit 1 is an inked (black) pixel.
struct BitImage {
    int width = 0;
    int height = 0;
    Bits bits;

    size_t size() const { return bits.size(); }
};

Bits image_to_bits(const BitImage& img);
BitImage bits_to_image(const Bits& bits, int width, int height);

// Portable bitmap files: P1 (ASCII) and P4 (binary) are read, P4 is
// written unless ascii is requested.
BitImage read_pbm(const std::string& path);
void write_pbm(const std::string& path, const BitImage& img, bool binary = true);

// Packed bit files (ciphertext): 8-byte big-endian bit count, then the
// bits MSB-first.
void write_packed_bits(const std::string& path, const Bits& bits);
Bits read_packed_bits(const std::string& path);

// Key files: "EQK1" magic, 1-byte stage, 1-byte party, 8-byte big-endian
// bit count, packed bits MSB-first.
void write_key_file(const std::string& path, const BitKey& key);
BitKey read_key_file(const std::string& path);

}  // namespace qkd
