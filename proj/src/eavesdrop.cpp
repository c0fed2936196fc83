#include "qkd/eavesdrop.hpp"

#include <cmath>
#include <numeric>

#include "qkd/errors.hpp"

namespace qkd {

void AttackModel::validate() const {
    if (kind == AttackKind::None) return;
    if (basis_set.empty()) {
        throw std::invalid_argument("AttackModel: intercept-resend needs at least one basis");
    }
    if (!basis_probabilities.empty()) {
        if (basis_probabilities.size() != basis_set.size()) {
            throw std::invalid_argument("AttackModel: one probability per basis required");
        }
        double total = 0.0;
        for (double p : basis_probabilities) {
            if (p < 0.0) throw std::invalid_argument("AttackModel: negative basis probability");
            total += p;
        }
        if (std::abs(total - 1.0) > 1e-9) {
            throw std::invalid_argument("AttackModel: basis probabilities must sum to 1");
        }
    }
}

std::vector<double> AttackModel::normalized_probabilities() const {
    if (!basis_probabilities.empty()) return basis_probabilities;
    return std::vector<double>(basis_set.size(), 1.0 / static_cast<double>(basis_set.size()));
}

AttackModel AttackModel::intercept_resend(std::vector<Angle> bases, std::vector<double> probs) {
    AttackModel m;
    m.kind = AttackKind::InterceptResend;
    m.basis_set = std::move(bases);
    m.basis_probabilities = std::move(probs);
    m.validate();
    return m;
}

JointProbabilities attacked_joint_probabilities(Angle alpha, Angle beta, const AttackModel& attack,
                                                const NoiseModel& noise) {
    attack.validate();
    noise.validate();
    if (attack.kind == AttackKind::None) {
        return joint_probabilities(alpha, beta, noise);
    }

    // Eve measures photon B in basis e and resends her outcome state. With
    // s_a = sin^2(alpha - e), s_b = sin^2(e - beta):
    //   p_++ = p_-- = 1/2 (s_a c_b + c_a s_b)
    //   p_+- = p_-+ = 1/2 (s_a s_b + c_a c_b)
    // mixed over Eve's basis distribution.
    JointProbabilities ideal{0.0, 0.0, 0.0, 0.0};
    const auto probs = attack.normalized_probabilities();
    for (size_t i = 0; i < attack.basis_set.size(); ++i) {
        const Angle e = attack.basis_set[i];
        const double sa = std::sin(delta_radians(alpha, e));
        const double sb = std::sin(delta_radians(e, beta));
        const double s_a = sa * sa;
        const double c_a = 1.0 - s_a;
        const double s_b = sb * sb;
        const double c_b = 1.0 - s_b;
        const double w = probs[i];
        ideal.p_pp += w * 0.5 * (s_a * c_b + c_a * s_b);
        ideal.p_pm += w * 0.5 * (s_a * s_b + c_a * c_b);
    }
    ideal.p_mm = ideal.p_pp;
    ideal.p_mp = ideal.p_pm;

    const double v = noise.visibility;
    const double floor = (1.0 - v) * 0.25;
    JointProbabilities jp;
    jp.p_pp = v * ideal.p_pp + floor;
    jp.p_pm = v * ideal.p_pm + floor;
    jp.p_mp = v * ideal.p_mp + floor;
    jp.p_mm = v * ideal.p_mm + floor;
    return jp;
}

PairSampler attacked_sampler(const AttackModel& attack, const NoiseModel& noise) {
    attack.validate();
    noise.validate();
    if (attack.kind == AttackKind::None) {
        return singlet_sampler(noise);
    }
    return [attack, noise](Angle a, Angle b, RandomStream& rng) {
        return sample_from(attacked_joint_probabilities(a, b, attack, noise), rng);
    };
}

namespace {

// Ground-truth sifted-key error rate over all parallel-setting records.
double sifted_key_error(const SiftResult& s) {
    if (s.kept == 0) return 0.0;
    return static_cast<double>(hamming_distance(s.alice.bits, s.bob.bits)) /
           static_cast<double>(s.kept);
}

}  // namespace

AttackReport attack_report(ProtocolKind kind, const AttackModel& attack, uint64_t run_size,
                           const NoiseModel& noise, uint64_t seed,
                           const DecisionThresholds& thresholds) {
    if (run_size == 0) {
        throw std::invalid_argument("attack_report: run size must be positive");
    }
    attack.validate();
    noise.validate();

    // Lossless low-rate source: every emission becomes a coincidence and
    // matching is unambiguous at a 4 ns window.
    SourceConfig source;
    source.pair_rate_hz = 1e4;
    source.path_efficiency = 1.0;
    source.duration_s = static_cast<double>(run_size) / source.pair_rate_hz;
    const ClockModel clock{};

    AttackReport report;
    report.kind = kind;

    auto evaluate = [&](const PairSampler& sampler, uint64_t run_seed, double& stat, double& sigma,
                        double& key_qber, Decision& decision, uint64_t& n_coinc) {
        const auto run = run_protocol(kind, source, sampler, clock, clock, run_seed);
        n_coinc = run.coincidences.records.size();
        const auto sifted = sift(kind, run.coincidences.records);
        key_qber = sifted_key_error(sifted);
        if (kind == ProtocolKind::Wigner) {
            const auto est = wigner_test(run.coincidences.records);
            stat = est.w;
            sigma = est.std_error;
            decision = security_decision(kind, est, std::nullopt, thresholds);
        } else {
            stat = key_qber;
            sigma = sifted.kept ? std::sqrt(key_qber * (1.0 - key_qber) /
                                            static_cast<double>(sifted.kept))
                                : 0.0;
            decision = security_decision(kind, std::nullopt, stat, thresholds);
        }
    };

    evaluate(singlet_sampler(noise), seed, report.stat_clean, report.sigma_clean,
             report.key_qber_clean, report.decision_clean, report.coincidences_clean);
    evaluate(attacked_sampler(attack, noise), seed + 1, report.stat_attacked,
             report.sigma_attacked, report.key_qber_attacked, report.decision_attacked,
             report.coincidences_attacked);
    report.detected = !report.decision_attacked.accept;
    return report;
}

}  // namespace qkd
