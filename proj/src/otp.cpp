#include "qkd/otp.hpp"

#include <array>
#include <cctype>
#include <fstream>
#include <sstream>

#include "qkd/errors.hpp"

namespace qkd {

PadLedger::PadLedger(BitKey key, bool require_corrected) : key_(std::move(key)) {
    if (require_corrected && key_.stage != KeyStage::Corrected) {
        throw std::invalid_argument(std::string("PadLedger: key stage is ") +
                                    key_stage_name(key_.stage) +
                                    "; only corrected keys may encrypt (override to allow)");
    }
}

Bits PadLedger::xor_apply(const Bits& data) { return xor_apply_at(data, spent_); }

Bits PadLedger::xor_apply_at(const Bits& data, size_t bit_offset) {
    if (bit_offset < spent_) {
        throw KeyReuseError("PadLedger: offset addresses already-spent pad bits");
    }
    if (bit_offset > key_.size() || key_.size() - bit_offset < data.size()) {
        throw KeyExhaustedError("PadLedger: pad too short (" +
                                std::to_string(key_.size() - std::min(spent_, key_.size())) +
                                " bits left, " + std::to_string(data.size()) + " requested)");
    }
    Bits out(data.size());
    for (size_t i = 0; i < data.size(); ++i) {
        out[i] = data[i] ^ key_.bits[bit_offset + i];
    }
    spent_ = bit_offset + data.size();
    return out;
}

Bits image_to_bits(const BitImage& img) {
    if (img.width <= 0 || img.height <= 0) {
        throw std::invalid_argument("image_to_bits: dimensions must be positive");
    }
    if (img.bits.size() != static_cast<size_t>(img.width) * static_cast<size_t>(img.height)) {
        throw std::invalid_argument("image_to_bits: bit count does not match dimensions");
    }
    return img.bits;
}

BitImage bits_to_image(const Bits& bits, int width, int height) {
    if (width <= 0 || height <= 0) {
        throw std::invalid_argument("bits_to_image: dimensions must be positive");
    }
    if (bits.size() != static_cast<size_t>(width) * static_cast<size_t>(height)) {
        throw std::invalid_argument("bits_to_image: bit count does not match dimensions");
    }
    return BitImage{width, height, bits};
}

namespace {

// PBM token reader skipping whitespace and '#' comments.
struct PbmScanner {
    std::istream& in;

    int next_char() {
        int c;
        while ((c = in.get()) != EOF) {
            if (c == '#') {
                while ((c = in.get()) != EOF && c != '\n') {
                }
                continue;
            }
            if (!std::isspace(c)) return c;
        }
        return EOF;
    }

    int next_int(const char* what) {
        int c = next_char();
        if (c == EOF || !std::isdigit(c)) {
            throw std::invalid_argument(std::string("read_pbm: expected ") + what);
        }
        long v = 0;
        while (c != EOF && std::isdigit(c)) {
            v = v * 10 + (c - '0');
            if (v > 1000000) throw std::invalid_argument("read_pbm: dimension too large");
            c = in.get();
        }
        return static_cast<int>(v);
    }
};

}  // namespace

BitImage read_pbm(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("read_pbm: cannot open " + path);

    std::array<char, 2> magic{};
    in.read(magic.data(), 2);
    if (!in || magic[0] != 'P' || (magic[1] != '1' && magic[1] != '4')) {
        throw std::invalid_argument("read_pbm: not a P1/P4 bitmap: " + path);
    }
    const bool binary = magic[1] == '4';

    PbmScanner scan{in};
    BitImage img;
    img.width = scan.next_int("width");
    img.height = scan.next_int("height");
    const size_t count = static_cast<size_t>(img.width) * static_cast<size_t>(img.height);
    img.bits.reserve(count);

    if (binary) {
        // Exactly one whitespace byte after the height, then packed rows,
        // each padded to a byte boundary.
        const size_t row_bytes = (static_cast<size_t>(img.width) + 7) / 8;
        std::vector<char> row(row_bytes);
        for (int y = 0; y < img.height; ++y) {
            in.read(row.data(), static_cast<std::streamsize>(row_bytes));
            if (!in) throw std::invalid_argument("read_pbm: truncated pixel data");
            for (int x = 0; x < img.width; ++x) {
                img.bits.push_back(
                    (static_cast<uint8_t>(row[static_cast<size_t>(x) / 8]) >> (7 - x % 8)) & 1u);
            }
        }
    } else {
        for (size_t i = 0; i < count; ++i) {
            const int c = scan.next_char();
            if (c != '0' && c != '1') {
                throw std::invalid_argument("read_pbm: bad P1 pixel token");
            }
            img.bits.push_back(static_cast<uint8_t>(c - '0'));
        }
    }
    return img;
}

void write_pbm(const std::string& path, const BitImage& img, bool binary) {
    if (img.width <= 0 || img.height <= 0 ||
        img.bits.size() != static_cast<size_t>(img.width) * static_cast<size_t>(img.height)) {
        throw std::invalid_argument("write_pbm: inconsistent image");
    }
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("write_pbm: cannot open " + path);
    if (binary) {
        out << "P4\n" << img.width << " " << img.height << "\n";
        const size_t row_bytes = (static_cast<size_t>(img.width) + 7) / 8;
        std::vector<uint8_t> row(row_bytes);
        for (int y = 0; y < img.height; ++y) {
            std::fill(row.begin(), row.end(), 0);
            for (int x = 0; x < img.width; ++x) {
                if (img.bits[static_cast<size_t>(y) * img.width + x]) {
                    row[static_cast<size_t>(x) / 8] |= static_cast<uint8_t>(0x80u >> (x % 8));
                }
            }
            out.write(reinterpret_cast<const char*>(row.data()),
                      static_cast<std::streamsize>(row_bytes));
        }
    } else {
        out << "P1\n" << img.width << " " << img.height << "\n";
        for (int y = 0; y < img.height; ++y) {
            for (int x = 0; x < img.width; ++x) {
                out << (img.bits[static_cast<size_t>(y) * img.width + x] ? '1' : '0');
                out << (x + 1 == img.width ? '\n' : ' ');
            }
        }
    }
    if (!out) throw std::runtime_error("write_pbm: write failed for " + path);
}

namespace {

void put_u64_be(std::ostream& out, uint64_t v) {
    for (int shift = 56; shift >= 0; shift -= 8) {
        out.put(static_cast<char>((v >> shift) & 0xff));
    }
}

uint64_t get_u64_be(std::istream& in, const char* what) {
    uint64_t v = 0;
    for (int i = 0; i < 8; ++i) {
        const int c = in.get();
        if (c == EOF) throw std::invalid_argument(std::string("truncated ") + what);
        v = (v << 8) | static_cast<uint8_t>(c);
    }
    return v;
}

}  // namespace

void write_packed_bits(const std::string& path, const Bits& bits) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("write_packed_bits: cannot open " + path);
    put_u64_be(out, bits.size());
    const auto packed = pack_bits(bits);
    out.write(reinterpret_cast<const char*>(packed.data()),
              static_cast<std::streamsize>(packed.size()));
    if (!out) throw std::runtime_error("write_packed_bits: write failed for " + path);
}

Bits read_packed_bits(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("read_packed_bits: cannot open " + path);
    const uint64_t count = get_u64_be(in, "bit count header");
    std::vector<uint8_t> packed((count + 7) / 8);
    in.read(reinterpret_cast<char*>(packed.data()), static_cast<std::streamsize>(packed.size()));
    if (!in && count > 0) throw std::invalid_argument("read_packed_bits: truncated payload");
    return unpack_bits(packed, count);
}

void write_key_file(const std::string& path, const BitKey& key) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("write_key_file: cannot open " + path);
    out.write("EQK1", 4);
    out.put(static_cast<char>(key.stage));
    out.put(static_cast<char>(key.party));
    put_u64_be(out, key.size());
    const auto packed = pack_bits(key.bits);
    out.write(reinterpret_cast<const char*>(packed.data()),
              static_cast<std::streamsize>(packed.size()));
    if (!out) throw std::runtime_error("write_key_file: write failed for " + path);
}

BitKey read_key_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("read_key_file: cannot open " + path);
    std::array<char, 4> magic{};
    in.read(magic.data(), 4);
    if (!in || std::string_view(magic.data(), 4) != "EQK1") {
        throw std::invalid_argument("read_key_file: bad magic in " + path);
    }
    const int stage = in.get();
    const int party = in.get();
    if (stage < 0 || stage > 2 || party < 0 || party > 1) {
        throw std::invalid_argument("read_key_file: bad header in " + path);
    }
    const uint64_t count = get_u64_be(in, "bit count header");
    std::vector<uint8_t> packed((count + 7) / 8);
    in.read(reinterpret_cast<char*>(packed.data()), static_cast<std::streamsize>(packed.size()));
    if (!in && count > 0) throw std::invalid_argument("read_key_file: truncated payload");
    BitKey key;
    key.stage = static_cast<KeyStage>(stage);
    key.party = static_cast<Party>(party);
    key.bits = unpack_bits(packed, count);
    return key;
}

}  // namespace qkd
