#include "qkd/channel.hpp"

#include <cstring>

namespace qkd {

namespace {

void put_u32(std::vector<uint8_t>& out, uint32_t v) {
    out.push_back(static_cast<uint8_t>(v >> 24));
    out.push_back(static_cast<uint8_t>(v >> 16));
    out.push_back(static_cast<uint8_t>(v >> 8));
    out.push_back(static_cast<uint8_t>(v));
}

class Reader {
public:
    Reader(const uint8_t* data, size_t size) : data_(data), size_(size) {}

    uint8_t u8() {
        need(1);
        return data_[pos_++];
    }

    uint32_t u32() {
        need(4);
        uint32_t v = (static_cast<uint32_t>(data_[pos_]) << 24) |
                     (static_cast<uint32_t>(data_[pos_ + 1]) << 16) |
                     (static_cast<uint32_t>(data_[pos_ + 2]) << 8) |
                     static_cast<uint32_t>(data_[pos_ + 3]);
        pos_ += 4;
        return v;
    }

    Bits packed_bits(size_t bit_count) {
        const size_t nbytes = (bit_count + 7) / 8;
        need(nbytes);
        std::vector<uint8_t> bytes(data_ + pos_, data_ + pos_ + nbytes);
        pos_ += nbytes;
        return unpack_bits(bytes, bit_count);
    }

    void done() const {
        if (pos_ != size_) {
            throw std::invalid_argument("decode_message: trailing bytes in payload");
        }
    }

private:
    void need(size_t n) const {
        if (pos_ + n > size_) {
            throw std::invalid_argument("decode_message: truncated payload");
        }
    }

    const uint8_t* data_;
    size_t size_;
    size_t pos_ = 0;
};

Party parse_party(uint8_t v) {
    if (v > 1) throw std::invalid_argument("decode_message: bad party byte");
    return static_cast<Party>(v);
}

void append_packed(std::vector<uint8_t>& out, const Bits& bits) {
    auto packed = pack_bits(bits);
    out.insert(out.end(), packed.begin(), packed.end());
}

}  // namespace

MessageType message_type(const ChannelMessage& m) {
    return std::visit(
        [](const auto& v) -> MessageType {
            using T = std::decay_t<decltype(v)>;
            if constexpr (std::is_same_v<T, SettingsDisclosure>) return MessageType::SettingsDisclosure;
            if constexpr (std::is_same_v<T, TestSubsetReveal>) return MessageType::TestSubsetReveal;
            if constexpr (std::is_same_v<T, ParityVector>) return MessageType::ParityVector;
            if constexpr (std::is_same_v<T, ParityDecision>) return MessageType::ParityDecision;
            if constexpr (std::is_same_v<T, Ack>) return MessageType::Ack;
        },
        m);
}

std::vector<uint8_t> encode_message(const ChannelMessage& m) {
    std::vector<uint8_t> payload;
    std::visit(
        [&payload](const auto& v) {
            using T = std::decay_t<decltype(v)>;
            if constexpr (std::is_same_v<T, SettingsDisclosure>) {
                payload.push_back(static_cast<uint8_t>(v.party));
                put_u32(payload, static_cast<uint32_t>(v.setting_indices.size()));
                append_packed(payload, v.setting_indices);
            } else if constexpr (std::is_same_v<T, TestSubsetReveal>) {
                if (v.positions.size() != v.bits.size()) {
                    throw std::invalid_argument("TestSubsetReveal: one bit per position required");
                }
                payload.push_back(static_cast<uint8_t>(v.party));
                put_u32(payload, static_cast<uint32_t>(v.positions.size()));
                for (uint32_t pos : v.positions) put_u32(payload, pos);
                append_packed(payload, v.bits);
            } else if constexpr (std::is_same_v<T, ParityVector>) {
                put_u32(payload, static_cast<uint32_t>(v.parities.size()));
                append_packed(payload, v.parities);
            } else if constexpr (std::is_same_v<T, ParityDecision>) {
                put_u32(payload, static_cast<uint32_t>(v.keep.size()));
                append_packed(payload, v.keep);
            } else if constexpr (std::is_same_v<T, Ack>) {
                payload.push_back(v.status);
            }
        },
        m);

    std::vector<uint8_t> frame;
    frame.reserve(5 + payload.size());
    put_u32(frame, static_cast<uint32_t>(1 + payload.size()));
    frame.push_back(static_cast<uint8_t>(message_type(m)));
    frame.insert(frame.end(), payload.begin(), payload.end());
    return frame;
}

ChannelMessage decode_message(const std::vector<uint8_t>& frame) {
    if (frame.size() < 5) {
        throw std::invalid_argument("decode_message: frame shorter than header");
    }
    const uint32_t length = (static_cast<uint32_t>(frame[0]) << 24) |
                            (static_cast<uint32_t>(frame[1]) << 16) |
                            (static_cast<uint32_t>(frame[2]) << 8) | static_cast<uint32_t>(frame[3]);
    if (length != frame.size() - 4) {
        throw std::invalid_argument("decode_message: length field does not match frame size");
    }
    const uint8_t type = frame[4];
    Reader r(frame.data() + 5, frame.size() - 5);

    switch (static_cast<MessageType>(type)) {
        case MessageType::SettingsDisclosure: {
            SettingsDisclosure m;
            m.party = parse_party(r.u8());
            const uint32_t count = r.u32();
            m.setting_indices = r.packed_bits(count);
            r.done();
            return m;
        }
        case MessageType::TestSubsetReveal: {
            TestSubsetReveal m;
            m.party = parse_party(r.u8());
            const uint32_t count = r.u32();
            m.positions.reserve(count);
            for (uint32_t i = 0; i < count; ++i) m.positions.push_back(r.u32());
            m.bits = r.packed_bits(count);
            r.done();
            return m;
        }
        case MessageType::ParityVector: {
            ParityVector m;
            const uint32_t count = r.u32();
            m.parities = r.packed_bits(count);
            r.done();
            return m;
        }
        case MessageType::ParityDecision: {
            ParityDecision m;
            const uint32_t count = r.u32();
            m.keep = r.packed_bits(count);
            r.done();
            return m;
        }
        case MessageType::Ack: {
            Ack m;
            m.status = r.u8();
            r.done();
            return m;
        }
    }
    throw std::invalid_argument("decode_message: unknown message type");
}

void DuplexChannel::send(Party from, const ChannelMessage& m) {
    auto frame = encode_message(m);
    log_.push_back({from, frame});
    if (from == Party::Alice) {
        to_bob_.push_back(std::move(frame));
    } else {
        to_alice_.push_back(std::move(frame));
    }
}

ChannelMessage DuplexChannel::receive(Party to) {
    auto& queue = (to == Party::Alice) ? to_alice_ : to_bob_;
    if (queue.empty()) {
        throw std::runtime_error("DuplexChannel: receive on empty queue");
    }
    auto frame = std::move(queue.front());
    queue.pop_front();
    return decode_message(frame);
}

bool DuplexChannel::has_pending(Party to) const {
    return to == Party::Alice ? !to_alice_.empty() : !to_bob_.empty();
}

}  // namespace qkd
