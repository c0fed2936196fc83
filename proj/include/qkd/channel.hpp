#pragma once

#include <cstdint>
#include <deque>
#include <stdexcept>
#include <variant>
#include <vector>

#include "qkd/bits.hpp"

namespace qkd {

// Classical-channel records exchanged between Alice and Bob.
//
// Wire frame: 4-byte big-endian length, 1-byte message type, payload; the
// length counts the type byte plus the payload. All integers are
// big-endian, all bit vectors are packed MSB-first.
//
// Payloads:
//   SettingsDisclosure  party(1) count(4) packed setting indices (1 bit each)
//   TestSubsetReveal    party(1) count(4) count x position(4) packed bits
//   ParityVector        block_count(4) packed parity bits
//   ParityDecision      block_count(4) packed keep flags
//   Ack                 status(1)
//
// Outcome-derived bits appear only in TestSubsetReveal (the sacrificed
// subset) and ParityVector (one parity bit per block); every other payload
// is settings or bookkeeping.
enum class MessageType : uint8_t {
    SettingsDisclosure = 1,
    TestSubsetReveal = 2,
    ParityVector = 3,
    ParityDecision = 4,
    Ack = 5,
};

struct SettingsDisclosure {
    Party party = Party::Alice;
    Bits setting_indices;
};

struct TestSubsetReveal {
    Party party = Party::Alice;
    std::vector<uint32_t> positions;
    Bits bits;  // one revealed bit per position
};

struct ParityVector {
    Bits parities;  // one bit per block
};

struct ParityDecision {
    Bits keep;  // one flag per block
};

struct Ack {
    uint8_t status = 0;
};

using ChannelMessage =
    std::variant<SettingsDisclosure, TestSubsetReveal, ParityVector, ParityDecision, Ack>;

MessageType message_type(const ChannelMessage& m);

std::vector<uint8_t> encode_message(const ChannelMessage& m);
ChannelMessage decode_message(const std::vector<uint8_t>& frame);

// Ordered, reliable, in-process FIFO duplex link. Every send passes through
// the wire encoding, and a tap keeps the encoded frames for audits.
class DuplexChannel {
public:
    void send(Party from, const ChannelMessage& m);
    ChannelMessage receive(Party to);
    bool has_pending(Party to) const;

    struct LoggedFrame {
        Party sender;
        std::vector<uint8_t> frame;
    };
    const std::vector<LoggedFrame>& wire_log() const { return log_; }

private:
    std::deque<std::vector<uint8_t>> to_alice_;
    std::deque<std::vector<uint8_t>> to_bob_;
    std::vector<LoggedFrame> log_;
};

}  // namespace qkd
