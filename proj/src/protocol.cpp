#include "qkd/protocol.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>

#include "qkd/errors.hpp"

namespace qkd {

const char* protocol_name(ProtocolKind kind) {
    return kind == ProtocolKind::Wigner ? "wigner" : "bb84";
}

std::vector<Angle> alice_settings(ProtocolKind kind) {
    if (kind == ProtocolKind::Wigner) return {Angle(-30.0), Angle(0.0)};
    return {Angle(0.0), Angle(45.0)};
}

std::vector<Angle> bob_settings(ProtocolKind kind) {
    if (kind == ProtocolKind::Wigner) return {Angle(0.0), Angle(30.0)};
    return {Angle(0.0), Angle(45.0)};
}

SettingSchedule make_schedule(ProtocolKind kind, Party party, int64_t dwell_ns, uint64_t seed) {
    auto settings = (party == Party::Alice) ? alice_settings(kind) : bob_settings(kind);
    return SettingSchedule::uniform(std::move(settings), dwell_ns, seed);
}

void CoincidenceCounts::add(Outcome a, Outcome b) {
    if (a == Outcome::Plus) {
        (b == Outcome::Plus ? c_pp : c_pm)++;
    } else {
        (b == Outcome::Plus ? c_mp : c_mm)++;
    }
}

double estimate_probability(const CoincidenceCounts& counts) {
    const uint64_t total = counts.total();
    if (total == 0) {
        throw UndefinedEstimateError("estimate_probability: zero total count");
    }
    return static_cast<double>(counts.c_pp) / static_cast<double>(total);
}

namespace {

double binomial_sigma(double p, uint64_t n) {
    return std::sqrt(p * (1.0 - p) / static_cast<double>(n));
}

constexpr double kAngleTolDeg = 1e-9;

bool same_angle(Angle a, Angle b) {
    return std::abs(a.degrees() - b.degrees()) < kAngleTolDeg;
}

}  // namespace

WignerEstimate wigner_from_counts(const CoincidenceCounts& chi_psi,
                                  const CoincidenceCounts& psi_omega,
                                  const CoincidenceCounts& chi_omega, const WignerAngles& angles) {
    WignerEstimate est;
    est.terms[0] = {angles.chi, angles.psi, chi_psi, 0.0, 0.0};
    est.terms[1] = {angles.psi, angles.omega, psi_omega, 0.0, 0.0};
    est.terms[2] = {angles.chi, angles.omega, chi_omega, 0.0, 0.0};
    for (auto& term : est.terms) {
        if (term.counts.total() == 0) {
            throw InsufficientDataError("wigner_test: no coincidences at settings (" +
                                        std::to_string(term.alice.degrees()) + ", " +
                                        std::to_string(term.bob.degrees()) + ")");
        }
        term.probability = estimate_probability(term.counts);
        term.sigma = binomial_sigma(term.probability, term.counts.total());
    }
    est.w = est.terms[0].probability + est.terms[1].probability - est.terms[2].probability;
    est.std_error = std::sqrt(est.terms[0].sigma * est.terms[0].sigma +
                              est.terms[1].sigma * est.terms[1].sigma +
                              est.terms[2].sigma * est.terms[2].sigma);
    return est;
}

WignerEstimate wigner_test(const std::vector<CoincidenceRecord>& records,
                           const WignerAngles& angles) {
    CoincidenceCounts chi_psi, psi_omega, chi_omega;
    for (const auto& r : records) {
        if (same_angle(r.setting_a, angles.chi) && same_angle(r.setting_b, angles.psi)) {
            chi_psi.add(r.outcome_a, r.outcome_b);
        } else if (same_angle(r.setting_a, angles.psi) && same_angle(r.setting_b, angles.omega)) {
            psi_omega.add(r.outcome_a, r.outcome_b);
        } else if (same_angle(r.setting_a, angles.chi) && same_angle(r.setting_b, angles.omega)) {
            chi_omega.add(r.outcome_a, r.outcome_b);
        }
    }
    return wigner_from_counts(chi_psi, psi_omega, chi_omega, angles);
}

ProtocolRun run_protocol(ProtocolKind kind, const SourceConfig& source, const PairSampler& sampler,
                         const ClockModel& clock_a, const ClockModel& clock_b, uint64_t seed,
                         int64_t window_ns, OffsetCorrection correction) {
    RandomStream root(seed);
    RandomStream stream_rng = root.derive(1);
    const auto schedule_a =
        make_schedule(kind, Party::Alice, source.switch_interval_ns, root.derive(2).seed());
    const auto schedule_b =
        make_schedule(kind, Party::Bob, source.switch_interval_ns, root.derive(3).seed());

    ProtocolRun run;
    const std::string run_id = std::string(protocol_name(kind)) + "-" + std::to_string(seed);
    auto streams = generate_streams(source, clock_a, clock_b, schedule_a, schedule_b, sampler,
                                    stream_rng, run_id);
    run.emitted_pairs = streams.emitted_pairs;
    run.coincidences = find_coincidences(streams.alice, streams.bob, window_ns, correction);
    run.alice = std::move(streams.alice);
    run.bob = std::move(streams.bob);
    return run;
}

ProtocolRun run_protocol(ProtocolKind kind, const SourceConfig& source, const NoiseModel& noise,
                         const ClockModel& clock_a, const ClockModel& clock_b, uint64_t seed,
                         int64_t window_ns, OffsetCorrection correction) {
    return run_protocol(kind, source, singlet_sampler(noise), clock_a, clock_b, seed, window_ns,
                        correction);
}

std::vector<CoincidenceRecord> sample_coincidences(ProtocolKind kind, uint64_t n,
                                                   const PairSampler& sampler, RandomStream& rng) {
    const auto sa = alice_settings(kind);
    const auto sb = bob_settings(kind);
    std::vector<CoincidenceRecord> records;
    records.reserve(n);
    for (uint64_t i = 0; i < n; ++i) {
        const auto ia = static_cast<uint8_t>(rng.below(sa.size()));
        const auto ib = static_cast<uint8_t>(rng.below(sb.size()));
        const auto [oa, ob] = sampler(sa[ia], sb[ib], rng);
        const int64_t t = static_cast<int64_t>(i);
        records.push_back({t, t, sa[ia], sb[ib], ia, ib, oa, ob});
    }
    return records;
}

std::vector<CoincidenceRecord> sample_coincidences(ProtocolKind kind, uint64_t n,
                                                   const NoiseModel& noise, RandomStream& rng) {
    return sample_coincidences(kind, n, singlet_sampler(noise), rng);
}

std::vector<PartyRecord> alice_view(const std::vector<CoincidenceRecord>& records) {
    std::vector<PartyRecord> v;
    v.reserve(records.size());
    for (const auto& r : records) v.push_back({r.setting_a, r.outcome_a});
    return v;
}

std::vector<PartyRecord> bob_view(const std::vector<CoincidenceRecord>& records) {
    std::vector<PartyRecord> v;
    v.reserve(records.size());
    for (const auto& r : records) v.push_back({r.setting_b, r.outcome_b});
    return v;
}

SiftResult sift(ProtocolKind kind, const std::vector<PartyRecord>& alice,
                const std::vector<PartyRecord>& bob) {
    (void)kind;  // both schemes key on equal-angle combinations
    if (alice.size() != bob.size()) {
        throw ProtocolDesyncError("sift: record lists differ in length");
    }
    SiftResult out;
    out.total = alice.size();
    out.alice.party = Party::Alice;
    out.bob.party = Party::Bob;
    out.alice.stage = out.bob.stage = KeyStage::Sifted;
    for (size_t i = 0; i < alice.size(); ++i) {
        if (!same_angle(alice[i].setting, bob[i].setting)) continue;
        out.alice.bits.push_back(outcome_to_bit(alice[i].outcome));
        // Bob inverts so the anticorrelated outcomes yield identical keys.
        out.bob.bits.push_back(outcome_to_bit(flip(bob[i].outcome)));
    }
    out.kept = out.alice.bits.size();
    out.discarded_fraction =
        out.total ? 1.0 - static_cast<double>(out.kept) / static_cast<double>(out.total) : 0.0;
    out.empty_warning = (out.kept == 0);
    return out;
}

SiftResult sift(ProtocolKind kind, const std::vector<CoincidenceRecord>& records) {
    return sift(kind, alice_view(records), bob_view(records));
}

QberEstimate estimate_qber(const BitKey& alice, const BitKey& bob, double sample_fraction,
                           RandomStream& rng) {
    if (alice.size() != bob.size()) {
        throw ProtocolDesyncError("estimate_qber: key lengths differ");
    }
    if (!(sample_fraction > 0.0 && sample_fraction < 1.0)) {
        throw std::invalid_argument("estimate_qber: sample fraction must be in (0, 1)");
    }
    const size_t n = alice.size();
    if (n == 0) {
        throw InsufficientDataError("estimate_qber: empty keys");
    }
    size_t k = static_cast<size_t>(std::floor(static_cast<double>(n) * sample_fraction));
    k = std::min(std::max<size_t>(k, 1), n);

    // Partial Fisher-Yates for a uniform k-subset.
    std::vector<uint32_t> idx(n);
    for (size_t i = 0; i < n; ++i) idx[i] = static_cast<uint32_t>(i);
    for (size_t i = 0; i < k; ++i) {
        const size_t j = i + static_cast<size_t>(rng.below(n - i));
        std::swap(idx[i], idx[j]);
    }
    QberEstimate est;
    est.revealed_positions.assign(idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(k));
    std::sort(est.revealed_positions.begin(), est.revealed_positions.end());
    est.compared = k;
    for (uint32_t pos : est.revealed_positions) {
        if (alice.bits[pos] != bob.bits[pos]) ++est.disagreements;
    }
    est.qber = static_cast<double>(est.disagreements) / static_cast<double>(k);
    return est;
}

BitKey remove_positions(const BitKey& key, const std::vector<uint32_t>& sorted_positions) {
    BitKey out;
    out.stage = key.stage;
    out.party = key.party;
    out.bits.reserve(key.size() - std::min(key.size(), sorted_positions.size()));
    size_t next = 0;
    for (size_t i = 0; i < key.size(); ++i) {
        if (next < sorted_positions.size() && sorted_positions[next] == i) {
            ++next;
            continue;
        }
        out.bits.push_back(key.bits[i]);
    }
    return out;
}

Decision security_decision(ProtocolKind kind, const std::optional<WignerEstimate>& wigner,
                           const std::optional<double>& qber, const DecisionThresholds& thresholds) {
    Decision d;
    char buf[160];
    if (kind == ProtocolKind::Wigner) {
        if (!wigner.has_value()) {
            throw InsufficientDataError("security_decision: Wigner estimate missing");
        }
        const double bound = wigner->w + thresholds.wigner_sigma_k * wigner->std_error;
        d.accept = bound < 0.0;
        std::snprintf(buf, sizeof(buf),
                      d.accept ? "wigner inequality violated: w = %.6g, w + %.3g sigma = %.6g < 0"
                               : "no wigner violation: w = %.6g, w + %.3g sigma = %.6g >= 0",
                      wigner->w, thresholds.wigner_sigma_k, bound);
        d.reason = buf;
        return d;
    }
    if (!qber.has_value()) {
        throw InsufficientDataError("security_decision: QBER estimate missing");
    }
    d.accept = *qber < thresholds.qber_abort;
    std::snprintf(buf, sizeof(buf),
                  d.accept ? "qber %.6g below threshold %.6g" : "qber %.6g at or above threshold %.6g",
                  *qber, thresholds.qber_abort);
    d.reason = buf;
    return d;
}

}  // namespace qkd
