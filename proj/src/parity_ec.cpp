#include "qkd/parity_ec.hpp"

#include <cmath>

#include "qkd/errors.hpp"

namespace qkd {

void ECParams::validate() const {
    if (block_length < 2) {
        throw std::invalid_argument("ECParams: block length must be at least 2");
    }
    if (!(error_rate >= 0.0 && error_rate < 0.5)) {
        throw std::invalid_argument("ECParams: error rate must be in [0, 0.5)");
    }
}

double binom_pnk(int n, int k, double p) {
    if (n < 0 || k < 0 || k > n) {
        throw std::invalid_argument("binom_pnk: k out of range");
    }
    if (!(p >= 0.0 && p <= 1.0)) {
        throw std::invalid_argument("binom_pnk: p out of range");
    }
    if (p == 0.0) return k == 0 ? 1.0 : 0.0;
    if (p == 1.0) return k == n ? 1.0 : 0.0;
    const double log_comb =
        std::lgamma(n + 1.0) - std::lgamma(k + 1.0) - std::lgamma(n - k + 1.0);
    return std::exp(log_comb + k * std::log(p) + (n - k) * std::log1p(-p));
}

double ec_efficiency(int n, double p) {
    ECParams{n, p}.validate();
    return (1.0 - binom_pnk(n, 1, p)) * static_cast<double>(n - 1) / static_cast<double>(n);
}

double ec_residual_error(int n, double p) {
    ECParams{n, p}.validate();
    return (1.0 - binom_pnk(n, 0, p) - binom_pnk(n, 1, p)) * 2.0 / static_cast<double>(n);
}

int optimal_block(double p, int n_max) {
    if (!(p > 0.0 && p < 0.5)) {
        throw std::invalid_argument("optimal_block: p must be in (0, 0.5)");
    }
    if (n_max < 2) {
        throw std::invalid_argument("optimal_block: n_max must be at least 2");
    }
    int best_n = 2;
    double best = ec_efficiency(2, p);
    for (int n = 3; n <= n_max; ++n) {
        const double eta = ec_efficiency(n, p);
        if (eta > best) {
            best = eta;
            best_n = n;
        }
    }
    return best_n;
}

namespace {

Bits block_parities(const Bits& bits, int n, uint64_t blocks) {
    Bits parities(blocks, 0);
    for (uint64_t b = 0; b < blocks; ++b) {
        uint8_t parity = 0;
        for (int i = 0; i < n; ++i) {
            parity ^= bits[b * static_cast<uint64_t>(n) + static_cast<uint64_t>(i)];
        }
        parities[b] = parity;
    }
    return parities;
}

// Keep agreeing blocks, dropping the last bit of each.
Bits reduce_key(const Bits& bits, int n, const Bits& keep) {
    Bits out;
    out.reserve(keep.size() * static_cast<size_t>(n - 1));
    for (uint64_t b = 0; b < keep.size(); ++b) {
        if (!keep[b]) continue;
        for (int i = 0; i + 1 < n; ++i) {
            out.push_back(bits[b * static_cast<uint64_t>(n) + static_cast<uint64_t>(i)]);
        }
    }
    return out;
}

}  // namespace

ECResult parity_reduce(const BitKey& alice, const BitKey& bob, const ECParams& params,
                       DuplexChannel& channel) {
    params.validate();
    if (alice.size() != bob.size()) {
        throw ProtocolDesyncError("parity_reduce: key lengths differ");
    }

    const int n = params.block_length;
    const uint64_t blocks = alice.size() / static_cast<uint64_t>(n);

    // Alice discloses her block parities; Bob answers with the keep flags.
    channel.send(Party::Alice, ParityVector{block_parities(alice.bits, n, blocks)});
    const auto alice_parities = std::get<ParityVector>(channel.receive(Party::Bob)).parities;
    const auto bob_parities = block_parities(bob.bits, n, blocks);
    Bits keep(blocks, 0);
    for (uint64_t b = 0; b < blocks; ++b) {
        keep[b] = (alice_parities[b] == bob_parities[b]) ? 1 : 0;
    }
    channel.send(Party::Bob, ParityDecision{keep});
    const auto decided = std::get<ParityDecision>(channel.receive(Party::Alice)).keep;

    ECResult result;
    result.alice.party = Party::Alice;
    result.bob.party = Party::Bob;
    result.alice.stage = result.bob.stage = KeyStage::Corrected;
    result.alice.bits = reduce_key(alice.bits, n, decided);
    result.bob.bits = reduce_key(bob.bits, n, keep);

    ECReport& rep = result.report;
    rep.input_length = alice.size();
    rep.output_length = result.alice.size();
    rep.blocks_total = blocks;
    for (uint64_t b = 0; b < blocks; ++b) rep.blocks_kept += keep[b];
    rep.predicted_efficiency = ec_efficiency(n, params.error_rate);
    rep.predicted_residual = ec_residual_error(n, params.error_rate);
    rep.realized_efficiency =
        rep.input_length ? static_cast<double>(rep.output_length) /
                               static_cast<double>(rep.input_length)
                         : 0.0;
    rep.realized_residual =
        rep.output_length ? static_cast<double>(hamming_distance(result.alice.bits,
                                                                 result.bob.bits)) /
                                static_cast<double>(rep.output_length)
                          : 0.0;
    return result;
}

ECResult parity_reduce(const BitKey& alice, const BitKey& bob, const ECParams& params) {
    DuplexChannel channel;
    return parity_reduce(alice, bob, params, channel);
}

}  // namespace qkd
