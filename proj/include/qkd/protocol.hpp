#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "qkd/channel.hpp"
#include "qkd/timetag.hpp"

namespace qkd {

// The two implemented key-distribution schemes. The Wigner scheme keys on
// the single parallel combination (0, 0) and tests the inequality on the
// three oblique ones; the BB84 variant keys on both parallel combinations.
enum class ProtocolKind : uint8_t { Wigner = 0, BB84 = 1 };

const char* protocol_name(ProtocolKind kind);

// Analyzer setting sets: Wigner, Alice {-30, 0} / Bob {0, +30};
// BB84, both parties {0, 45}.
std::vector<Angle> alice_settings(ProtocolKind kind);
std::vector<Angle> bob_settings(ProtocolKind kind);

SettingSchedule make_schedule(ProtocolKind kind, Party party, int64_t dwell_ns, uint64_t seed);

struct CoincidenceCounts {
    uint64_t c_pp = 0;
    uint64_t c_pm = 0;
    uint64_t c_mp = 0;
    uint64_t c_mm = 0;

    uint64_t total() const { return c_pp + c_pm + c_mp + c_mm; }
    void add(Outcome a, Outcome b);
};

// p_++ = C_++ / (C_++ + C_+- + C_-+ + C_--). Throws UndefinedEstimateError
// on a zero total.
double estimate_probability(const CoincidenceCounts& counts);

struct WignerTerm {
    Angle alice;
    Angle bob;
    CoincidenceCounts counts;
    double probability = 0.0;
    double sigma = 0.0;  // binomial error of `probability`
};

// w = p(chi,psi) + p(psi,omega) - p(chi,omega); local realism requires
// w >= 0, the singlet reaches -1/8 at (-30, 0, 30).
struct WignerEstimate {
    double w = 0.0;
    double std_error = 0.0;
    std::array<WignerTerm, 3> terms;
};

struct WignerAngles {
    Angle chi{-30.0};
    Angle psi{0.0};
    Angle omega{30.0};
};

WignerEstimate wigner_from_counts(const CoincidenceCounts& chi_psi,
                                  const CoincidenceCounts& psi_omega,
                                  const CoincidenceCounts& chi_omega,
                                  const WignerAngles& angles = {});

WignerEstimate wigner_test(const std::vector<CoincidenceRecord>& records,
                           const WignerAngles& angles = {});

struct ProtocolRun {
    CoincidenceSet coincidences;
    TimestampStream alice;
    TimestampStream bob;
    uint64_t emitted_pairs = 0;
};

// Full timed run: schedules for the protocol kind, stream generation,
// coincidence extraction.
ProtocolRun run_protocol(ProtocolKind kind, const SourceConfig& source, const PairSampler& sampler,
                         const ClockModel& clock_a, const ClockModel& clock_b, uint64_t seed,
                         int64_t window_ns = 4,
                         OffsetCorrection correction = OffsetCorrection::Enabled);

ProtocolRun run_protocol(ProtocolKind kind, const SourceConfig& source, const NoiseModel& noise,
                         const ClockModel& clock_a, const ClockModel& clock_b, uint64_t seed,
                         int64_t window_ns = 4,
                         OffsetCorrection correction = OffsetCorrection::Enabled);

// Timing-free sampling at the protocol's settings, one record per
// coincidence. Used for estimator statistics at large N where the timing
// machinery adds nothing.
std::vector<CoincidenceRecord> sample_coincidences(ProtocolKind kind, uint64_t n,
                                                   const PairSampler& sampler, RandomStream& rng);
std::vector<CoincidenceRecord> sample_coincidences(ProtocolKind kind, uint64_t n,
                                                   const NoiseModel& noise, RandomStream& rng);

// One party's half of a matched coincidence; vectors are aligned by
// coincidence index.
struct PartyRecord {
    Angle setting;
    Outcome outcome = Outcome::Plus;
};

std::vector<PartyRecord> alice_view(const std::vector<CoincidenceRecord>& records);
std::vector<PartyRecord> bob_view(const std::vector<CoincidenceRecord>& records);

struct SiftResult {
    BitKey alice;
    BitKey bob;
    double discarded_fraction = 0.0;
    uint64_t kept = 0;
    uint64_t total = 0;
    bool empty_warning = false;  // no parallel-setting events seen
};

// Keep only parallel-setting coincidences, map +1 -> 1 / -1 -> 0, and
// invert Bob's bits so the keys agree in the noiseless case.
SiftResult sift(ProtocolKind kind, const std::vector<PartyRecord>& alice,
                const std::vector<PartyRecord>& bob);
SiftResult sift(ProtocolKind kind, const std::vector<CoincidenceRecord>& records);

struct QberEstimate {
    double qber = 0.0;
    std::vector<uint32_t> revealed_positions;  // sorted
    uint64_t compared = 0;
    uint64_t disagreements = 0;
};

// Compare a random sample_fraction subset of the keys. The revealed
// positions are sacrificed: callers remove them from both keys.
QberEstimate estimate_qber(const BitKey& alice, const BitKey& bob, double sample_fraction,
                           RandomStream& rng);

BitKey remove_positions(const BitKey& key, const std::vector<uint32_t>& sorted_positions);

struct Decision {
    bool accept = false;
    std::string reason;
};

struct DecisionThresholds {
    double wigner_sigma_k = 3.0;  // require w + k*sigma < 0
    double qber_abort = 0.11;
};

// Wigner kind: accept iff the inequality is violated by a statistical
// margin. BB84 kind: accept iff the estimated QBER is below threshold.
Decision security_decision(ProtocolKind kind, const std::optional<WignerEstimate>& wigner,
                           const std::optional<double>& qber,
                           const DecisionThresholds& thresholds = {});

}  // namespace qkd
