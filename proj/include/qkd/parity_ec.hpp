#pragma once

#include <cstdint>

#include "qkd/bits.hpp"
#include "qkd/channel.hpp"

namespace qkd {

struct ECParams {
    int block_length = 8;     // n
    double error_rate = 0.0;  // p, assumed iid bit error probability

    void validate() const;
};

// Binomial P_n(k) = C(n,k) p^k (1-p)^(n-k), evaluated in the log domain for
// stability at large n.
double binom_pnk(int n, int k, double p);

// eta(n) = (1 - P_n(1)) (n-1)/n: expected ratio of key length after the
// parity pass to before, neglecting blocks lost to >=3 errors.
double ec_efficiency(int n, double p);

// p' = (1 - P_n(0) - P_n(1)) (2/n): expected remaining bit error rate under
// the same approximation.
double ec_residual_error(int n, double p);

// argmax of ec_efficiency(n, p) over n in [2, n_max], ties toward smaller
// n. Note the formula is only meaningful while n*p is small; the argmax is
// taken literally over the range.
int optimal_block(double p, int n_max = 64);

struct ECReport {
    uint64_t input_length = 0;
    uint64_t output_length = 0;
    uint64_t blocks_total = 0;
    uint64_t blocks_kept = 0;
    double predicted_efficiency = 0.0;
    double realized_efficiency = 0.0;
    double predicted_residual = 0.0;
    double realized_residual = 0.0;
};

struct ECResult {
    BitKey alice;
    BitKey bob;
    ECReport report;
};

// Single-pass parity reduction: both parties cut their keys into n-bit
// blocks (trailing partial block discarded), compare block parities over
// the channel, keep the blocks with agreeing parities and drop the last bit
// of every kept block. Exactly one parity bit per block is disclosed.
ECResult parity_reduce(const BitKey& alice, const BitKey& bob, const ECParams& params,
                       DuplexChannel& channel);
ECResult parity_reduce(const BitKey& alice, const BitKey& bob, const ECParams& params);

}  // namespace qkd
