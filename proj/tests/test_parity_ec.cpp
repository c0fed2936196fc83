#include <doctest.h>

#include <cmath>
#include <vector>

#include "qkd/errors.hpp"
#include "qkd/parity_ec.hpp"
#include "qkd/rng.hpp"

using namespace qkd;

namespace {

// Oracle: binomial pmf by direct multiplication, no logs.
double binom_oracle(int n, int k, double p) {
    double comb = 1.0;
    for (int i = 1; i <= k; ++i) {
        comb = comb * static_cast<double>(n - k + i) / static_cast<double>(i);
    }
    double v = comb;
    for (int i = 0; i < k; ++i) v *= p;
    for (int i = 0; i < n - k; ++i) v *= (1.0 - p);
    return v;
}

Bits random_bits(size_t n, RandomStream& rng) {
    Bits b(n);
    for (auto& bit : b) bit = rng.bernoulli(0.5) ? 1 : 0;
    return b;
}

Bits flip_iid(const Bits& in, double p, RandomStream& rng) {
    Bits out = in;
    for (auto& bit : out) {
        if (rng.bernoulli(p)) bit ^= 1;
    }
    return out;
}

}  // namespace

TEST_SUITE("parity_ec") {

TEST_CASE("binomial pmf matches the direct-multiplication oracle") {
    // Frozen oracle values at the operating point.
    CHECK(binom_pnk(8, 0, 0.025) == doctest::Approx(0.8166518036622619).epsilon(1e-12));
    CHECK(binom_pnk(8, 1, 0.025) == doctest::Approx(0.16751831869995115).epsilon(1e-12));
    CHECK(binom_pnk(8, 0, 0.0) == 1.0);
    CHECK(binom_pnk(16, 0, 0.0) == 1.0);

    RandomStream rng(41);
    for (int trial = 0; trial < 200; ++trial) {
        const int n = 2 + static_cast<int>(rng.below(63));
        const int k = static_cast<int>(rng.below(static_cast<uint64_t>(n) + 1));
        const double p = rng.uniform() * 0.49;
        CHECK(binom_pnk(n, k, p) == doctest::Approx(binom_oracle(n, k, p)).epsilon(1e-9));
    }
    CHECK_THROWS_AS(binom_pnk(8, 9, 0.1), std::invalid_argument);
    CHECK_THROWS_AS(binom_pnk(8, -1, 0.1), std::invalid_argument);
}

TEST_CASE("efficiency closed form") {
    // eta(8) at p = 2.5%: frozen from the oracle, and the 4-digit figure.
    CHECK(ec_efficiency(8, 0.025) == doctest::Approx(0.7284214711375427).epsilon(1e-12));
    CHECK(std::abs(ec_efficiency(8, 0.025) - 0.7284) < 1e-4);

    // p = 0: only the one-bit-per-block loss remains.
    for (int n : {2, 5, 8, 33}) {
        CHECK(ec_efficiency(n, 0.0) ==
              doctest::Approx(static_cast<double>(n - 1) / n).epsilon(1e-12));
    }

    // n = 16 against the oracle.
    CHECK(ec_efficiency(16, 0.025) ==
          doctest::Approx((1.0 - binom_oracle(16, 1, 0.025)) * 15.0 / 16.0).epsilon(1e-12));
}

TEST_CASE("residual error closed form") {
    // Frozen oracle value; equals the quoted 0.40% when rounded.
    CHECK(ec_residual_error(8, 0.025) == doctest::Approx(0.0039574694094467455).epsilon(1e-12));
    CHECK(std::abs(ec_residual_error(8, 0.025) * 100.0 - 0.40) < 0.005);

    CHECK(ec_residual_error(8, 0.0) == 0.0);

    // n = 4, p = 0.05 against exhaustive enumeration of 4-bit error patterns.
    double p_two_or_more = 0.0;
    for (int pattern = 0; pattern < 16; ++pattern) {
        int errors = 0;
        for (int b = 0; b < 4; ++b) errors += (pattern >> b) & 1;
        if (errors >= 2) {
            double prob = 1.0;
            for (int b = 0; b < 4; ++b) prob *= ((pattern >> b) & 1) ? 0.05 : 0.95;
            p_two_or_more += prob;
        }
    }
    CHECK(ec_residual_error(4, 0.05) == doctest::Approx(p_two_or_more * 0.5).epsilon(1e-12));
    CHECK(ec_residual_error(4, 0.05) == doctest::Approx(0.007009375).epsilon(1e-12));
}

TEST_CASE("optimal block length") {
    CHECK(optimal_block(0.025) == 8);
    // vanishing error rate: efficiency is monotone in (n-1)/n, capped at n_max
    CHECK(optimal_block(1e-9) == 64);
    CHECK(optimal_block(1e-9, 32) == 32);

    // brute-force scan oracle over a grid of p
    RandomStream rng(43);
    for (int trial = 0; trial < 20; ++trial) {
        const double p = 0.001 + rng.uniform() * 0.3;
        int best_n = 2;
        double best = ec_efficiency(2, p);
        for (int n = 3; n <= 64; ++n) {
            if (ec_efficiency(n, p) > best) {
                best = ec_efficiency(n, p);
                best_n = n;
            }
        }
        CHECK(optimal_block(p) == best_n);
    }

    // Shape at the paper's operating point: eta rises to n=8, falls after,
    // through the regime where the small-error approximation holds.
    for (int n = 3; n <= 8; ++n) {
        CHECK(ec_efficiency(n, 0.025) > ec_efficiency(n - 1, 0.025));
    }
    for (int n = 9; n <= 20; ++n) {
        CHECK(ec_efficiency(n, 0.025) < ec_efficiency(n - 1, 0.025));
    }

    CHECK_THROWS_AS(optimal_block(0.0), std::invalid_argument);
    CHECK_THROWS_AS(optimal_block(0.5), std::invalid_argument);
}

TEST_CASE("parity reduction keeps identical keys whole") {
    RandomStream rng(47);
    for (int n : {2, 8, 13}) {
        BitKey alice{random_bits(999, rng), KeyStage::Sifted, Party::Alice};
        BitKey bob = alice;
        bob.party = Party::Bob;
        const auto res = parity_reduce(alice, bob, ECParams{n, 0.0});
        const uint64_t blocks = 999 / static_cast<uint64_t>(n);
        CHECK(res.report.blocks_total == blocks);
        CHECK(res.report.blocks_kept == blocks);
        CHECK(res.alice.size() == blocks * static_cast<uint64_t>(n - 1));
        CHECK(res.alice.bits == res.bob.bits);
        CHECK(res.alice.stage == KeyStage::Corrected);
        CHECK(res.report.realized_residual == 0.0);
    }
}

TEST_CASE("single flipped bit drops exactly one block") {
    RandomStream rng(53);
    BitKey alice{random_bits(16, rng), KeyStage::Sifted, Party::Alice};
    BitKey bob = alice;
    bob.party = Party::Bob;
    bob.bits[3] ^= 1;
    const auto res = parity_reduce(alice, bob, ECParams{8, 0.0625});
    CHECK(res.report.blocks_total == 2);
    CHECK(res.report.blocks_kept == 1);
    CHECK(res.alice.size() == 7);
    CHECK(res.bob.size() == 7);
    CHECK(res.alice.bits == res.bob.bits);
    // the agreeing block is the second one, minus its last bit
    for (int i = 0; i < 7; ++i) CHECK(res.alice.bits[i] == alice.bits[8 + i]);
}

TEST_CASE("realized efficiency and residual track the exact block model") {
    // Exact expectations under iid errors (not the papered approximation):
    //   kept fraction = P(even #errors) = (1 + (1-2p)^n)/2
    //   residual = sum_{k even} k P_n(k) / (n * P_even)
    const int n = 8;
    const double p = 0.025;
    double p_even = 0.0;
    double err_mass = 0.0;
    for (int k = 0; k <= n; k += 2) {
        p_even += binom_oracle(n, k, p);
        err_mass += k * binom_oracle(n, k, p);
    }
    const double exact_eff = p_even * (n - 1) / n;
    const double exact_res = err_mass / (n * p_even);

    RandomStream rng(59);
    const size_t bits = 72000;
    double eff_sum = 0.0;
    double res_sum = 0.0;
    const int runs = 12;
    for (int run = 0; run < runs; ++run) {
        BitKey alice{random_bits(bits, rng), KeyStage::Sifted, Party::Alice};
        BitKey bob{flip_iid(alice.bits, p, rng), KeyStage::Sifted, Party::Bob};
        const auto res = parity_reduce(alice, bob, ECParams{n, p});
        CHECK(res.alice.size() == res.bob.size());
        eff_sum += res.report.realized_efficiency;
        res_sum += res.report.realized_residual;
    }
    const double mean_eff = eff_sum / runs;
    const double mean_res = res_sum / runs;
    // 4-sigma bands on the means (per-run sigmas ~3.5e-3 and ~4e-4).
    CHECK(std::abs(mean_eff - exact_eff) < 4.0 * 3.5e-3 / std::sqrt(double(runs)));
    CHECK(std::abs(mean_res - exact_res) < 4.0 * 4.5e-4 / std::sqrt(double(runs)));

    // The closed forms approximate the exact values to the documented bias.
    CHECK(std::abs(ec_efficiency(n, p) - exact_eff) < 2.0 * binom_oracle(n, 3, p));
    CHECK(std::abs(ec_residual_error(n, p) - exact_res) < 1e-3);
}

TEST_CASE("parity exchange discloses one bit per block and is auditable") {
    RandomStream rng(61);
    BitKey alice{random_bits(4000, rng), KeyStage::Sifted, Party::Alice};
    BitKey bob{flip_iid(alice.bits, 0.03, rng), KeyStage::Sifted, Party::Bob};
    DuplexChannel channel;
    const auto res = parity_reduce(alice, bob, ECParams{8, 0.03}, channel);

    REQUIRE(channel.wire_log().size() == 2);
    const auto parity_msg = decode_message(channel.wire_log()[0].frame);
    const auto decision_msg = decode_message(channel.wire_log()[1].frame);
    const auto& parities = std::get<ParityVector>(parity_msg).parities;
    const auto& keep = std::get<ParityDecision>(decision_msg).keep;
    REQUIRE(parities.size() == res.report.blocks_total);
    REQUIRE(keep.size() == res.report.blocks_total);

    // every kept block agreed in parity, every dropped one disagreed
    uint64_t kept = 0;
    for (size_t b = 0; b < keep.size(); ++b) {
        uint8_t pa = 0;
        uint8_t pb = 0;
        for (int i = 0; i < 8; ++i) {
            pa ^= alice.bits[b * 8 + static_cast<size_t>(i)];
            pb ^= bob.bits[b * 8 + static_cast<size_t>(i)];
        }
        CHECK(parities[b] == pa);
        CHECK(keep[b] == (pa == pb ? 1 : 0));
        kept += keep[b];
    }
    CHECK(kept == res.report.blocks_kept);
}

TEST_CASE("trailing partial block is discarded") {
    RandomStream rng(67);
    BitKey alice{random_bits(20, rng), KeyStage::Sifted, Party::Alice};
    BitKey bob = alice;
    bob.party = Party::Bob;
    const auto res = parity_reduce(alice, bob, ECParams{8, 0.0});
    CHECK(res.report.blocks_total == 2);
    CHECK(res.alice.size() == 14);
}

TEST_CASE("output keys always have equal length") {
    RandomStream rng(71);
    for (int trial = 0; trial < 30; ++trial) {
        const size_t len = 16 + rng.below(400);
        const int n = 2 + static_cast<int>(rng.below(12));
        BitKey alice{random_bits(len, rng), KeyStage::Sifted, Party::Alice};
        BitKey bob{flip_iid(alice.bits, 0.1 * rng.uniform(), rng), KeyStage::Sifted, Party::Bob};
        const auto res = parity_reduce(alice, bob, ECParams{n, 0.05});
        CHECK(res.alice.size() == res.bob.size());
        CHECK(res.report.output_length == res.report.blocks_kept * static_cast<uint64_t>(n - 1));
    }
}

TEST_CASE("errors") {
    BitKey a{Bits(16, 0), KeyStage::Sifted, Party::Alice};
    BitKey b{Bits(15, 0), KeyStage::Sifted, Party::Bob};
    CHECK_THROWS_AS(parity_reduce(a, b, ECParams{8, 0.025}), ProtocolDesyncError);
    CHECK_THROWS_AS(ECParams{1, 0.0}.validate(), std::invalid_argument);
    CHECK_THROWS_AS(ECParams{8, 0.5}.validate(), std::invalid_argument);
    CHECK_THROWS_AS(ECParams{8, -0.1}.validate(), std::invalid_argument);
}

}  // TEST_SUITE
