#include <doctest.h>

#include "qkd/channel.hpp"
#include "qkd/rng.hpp"

using namespace qkd;

TEST_SUITE("channel") {

TEST_CASE("frame layout is length-prefixed big-endian") {
    // Ack{7}: length 2 (type + status), type 5, status 7
    const auto frame = encode_message(Ack{7});
    const std::vector<uint8_t> expected = {0x00, 0x00, 0x00, 0x02, 0x05, 0x07};
    CHECK(frame == expected);

    // ParityVector with bits 1,0,1: count 3, packed 0b1010'0000
    const auto pv = encode_message(ParityVector{{1, 0, 1}});
    const std::vector<uint8_t> expected_pv = {0x00, 0x00, 0x00, 0x06, 0x03,
                                              0x00, 0x00, 0x00, 0x03, 0xa0};
    CHECK(pv == expected_pv);
}

TEST_CASE("messages round-trip through the wire format") {
    RandomStream rng(83);
    for (int trial = 0; trial < 100; ++trial) {
        SettingsDisclosure sd{rng.bernoulli(0.5) ? Party::Alice : Party::Bob, {}};
        const size_t n = rng.below(70);
        for (size_t i = 0; i < n; ++i) sd.setting_indices.push_back(rng.bernoulli(0.5) ? 1 : 0);
        const auto sd2 = std::get<SettingsDisclosure>(decode_message(encode_message(sd)));
        CHECK(sd2.party == sd.party);
        CHECK(sd2.setting_indices == sd.setting_indices);

        TestSubsetReveal tr{Party::Bob, {}, {}};
        for (size_t i = 0; i < rng.below(40); ++i) {
            tr.positions.push_back(static_cast<uint32_t>(rng.below(1u << 30)));
            tr.bits.push_back(rng.bernoulli(0.5) ? 1 : 0);
        }
        const auto tr2 = std::get<TestSubsetReveal>(decode_message(encode_message(tr)));
        CHECK(tr2.positions == tr.positions);
        CHECK(tr2.bits == tr.bits);

        ParityDecision pd;
        for (size_t i = 0; i < rng.below(90); ++i) pd.keep.push_back(rng.bernoulli(0.7) ? 1 : 0);
        const auto pd2 = std::get<ParityDecision>(decode_message(encode_message(pd)));
        CHECK(pd2.keep == pd.keep);
    }
}

TEST_CASE("malformed frames are rejected") {
    CHECK_THROWS_AS(decode_message({0x00, 0x00}), std::invalid_argument);
    // bad length field
    CHECK_THROWS_AS(decode_message({0x00, 0x00, 0x00, 0x09, 0x05, 0x00}), std::invalid_argument);
    // unknown type
    CHECK_THROWS_AS(decode_message({0x00, 0x00, 0x00, 0x02, 0x77, 0x00}), std::invalid_argument);
    // truncated payload
    CHECK_THROWS_AS(decode_message({0x00, 0x00, 0x00, 0x03, 0x03, 0x00}), std::invalid_argument);
    // trailing garbage inside the declared payload
    CHECK_THROWS_AS(decode_message({0x00, 0x00, 0x00, 0x03, 0x05, 0x00, 0x00}),
                    std::invalid_argument);
    // one bit per position violated at encode time
    CHECK_THROWS_AS(encode_message(TestSubsetReveal{Party::Alice, {1, 2}, {1}}),
                    std::invalid_argument);
}

TEST_CASE("duplex channel is FIFO per direction and logs frames") {
    DuplexChannel ch;
    ch.send(Party::Alice, Ack{1});
    ch.send(Party::Alice, Ack{2});
    ch.send(Party::Bob, Ack{3});
    CHECK(ch.has_pending(Party::Bob));
    CHECK(ch.has_pending(Party::Alice));
    CHECK(std::get<Ack>(ch.receive(Party::Bob)).status == 1);
    CHECK(std::get<Ack>(ch.receive(Party::Bob)).status == 2);
    CHECK(std::get<Ack>(ch.receive(Party::Alice)).status == 3);
    CHECK(!ch.has_pending(Party::Bob));
    CHECK_THROWS(ch.receive(Party::Bob));
    CHECK(ch.wire_log().size() == 3);
    CHECK(ch.wire_log()[0].sender == Party::Alice);
    CHECK(ch.wire_log()[2].sender == Party::Bob);
}

}  // TEST_SUITE
