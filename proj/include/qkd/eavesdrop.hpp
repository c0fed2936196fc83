#pragma once

#include <cstdint>
#include <vector>

#include "qkd/protocol.hpp"
#include "qkd/singlet.hpp"

namespace qkd {

enum class AttackKind : uint8_t { None = 0, InterceptResend = 1 };

// Eavesdropper on the photon-B path: measure the in-flight photon in a
// basis drawn from basis_set, re-emit a photon in the observed
// polarization. Turning the entangled pair into a product state raises the
// key error rate and destroys the Wigner violation.
struct AttackModel {
    AttackKind kind = AttackKind::None;
    std::vector<Angle> basis_set;
    std::vector<double> basis_probabilities;  // empty = uniform

    void validate() const;
    std::vector<double> normalized_probabilities() const;

    static AttackModel none() { return {}; }
    static AttackModel intercept_resend(std::vector<Angle> bases, std::vector<double> probs = {});
};

// Joint outcome law under the attack, mixed over Eve's basis choices, with
// the depolarizing noise applied on top. kind == None reduces exactly to
// joint_probabilities.
JointProbabilities attacked_joint_probabilities(Angle alpha, Angle beta, const AttackModel& attack,
                                                const NoiseModel& noise);

// Pair sampler for stream generation under the attack.
PairSampler attacked_sampler(const AttackModel& attack, const NoiseModel& noise);

struct AttackReport {
    ProtocolKind kind = ProtocolKind::Wigner;
    // Security statistic: Wigner w for the Wigner scheme, sifted-key QBER
    // for BB84.
    double stat_clean = 0.0;
    double stat_attacked = 0.0;
    double sigma_clean = 0.0;
    double sigma_attacked = 0.0;
    // Parallel-settings key error rate (ground truth over all sifted bits).
    double key_qber_clean = 0.0;
    double key_qber_attacked = 0.0;
    Decision decision_clean;
    Decision decision_attacked;
    bool detected = false;
    uint64_t coincidences_clean = 0;
    uint64_t coincidences_attacked = 0;
};

// Run the timed pipeline twice, without and with the attack, and apply the
// protocol's security decision to each. run_size is the number of emitted
// pairs; the source is configured lossless at a low rate so coincidence
// matching is unambiguous.
AttackReport attack_report(ProtocolKind kind, const AttackModel& attack, uint64_t run_size,
                           const NoiseModel& noise, uint64_t seed,
                           const DecisionThresholds& thresholds = {});

}  // namespace qkd
