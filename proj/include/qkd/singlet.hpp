#pragma once

#include <cmath>
#include <stdexcept>
#include <utility>

#include "qkd/angle.hpp"
#include "qkd/rng.hpp"

namespace qkd {

// Outcome at a polarizing analyzer: +1 means polarization parallel to the
// analyzer axis (key bit 1), -1 orthogonal (key bit 0).
enum class Outcome : int8_t { Plus = 1, Minus = -1 };

inline int outcome_sign(Outcome o) { return static_cast<int>(o); }
inline uint8_t outcome_to_bit(Outcome o) { return o == Outcome::Plus ? 1 : 0; }
inline Outcome flip(Outcome o) { return o == Outcome::Plus ? Outcome::Minus : Outcome::Plus; }

// Depolarizing channel on the ideal singlet correlations: each joint
// probability cell becomes V * ideal + (1 - V)/4. V = 1 is the clean
// state; the bit error rate at parallel analyzers is (1 - V)/2.
struct NoiseModel {
    double visibility = 1.0;

    void validate() const {
        if (!(visibility >= 0.0 && visibility <= 1.0)) {
            throw std::invalid_argument("NoiseModel: visibility must be in [0, 1]");
        }
    }

    static NoiseModel for_qber(double qber) {
        NoiseModel m{1.0 - 2.0 * qber};
        m.validate();
        return m;
    }
};

// Joint outcome probabilities for one pair of analyzer settings,
// cells ordered (++, +-, -+, --).
struct JointProbabilities {
    double p_pp = 0.0;
    double p_pm = 0.0;
    double p_mp = 0.0;
    double p_mm = 0.0;

    double sum() const { return p_pp + p_pm + p_mp + p_mm; }
    // Probability both analyzers report the same sign. After Bob's bit
    // inversion this is the key error probability at these settings.
    double same_outcome() const { return p_pp + p_mm; }
};

// Singlet-state prediction p_++(alpha, beta) = 1/2 sin^2(alpha - beta),
// mixed with white noise per the visibility.
inline JointProbabilities joint_probabilities(Angle alpha, Angle beta, const NoiseModel& noise) {
    noise.validate();
    const double s = std::sin(delta_radians(alpha, beta));
    const double s2 = s * s;
    const double v = noise.visibility;
    const double floor = (1.0 - v) * 0.25;
    JointProbabilities jp;
    jp.p_pp = jp.p_mm = v * 0.5 * s2 + floor;
    jp.p_pm = jp.p_mp = v * 0.5 * (1.0 - s2) + floor;
    return jp;
}

// Draw one outcome pair from the given cell probabilities.
inline std::pair<Outcome, Outcome> sample_from(const JointProbabilities& jp, RandomStream& rng) {
    const double u = rng.uniform();
    if (u < jp.p_pp) return {Outcome::Plus, Outcome::Plus};
    if (u < jp.p_pp + jp.p_pm) return {Outcome::Plus, Outcome::Minus};
    if (u < jp.p_pp + jp.p_pm + jp.p_mp) return {Outcome::Minus, Outcome::Plus};
    return {Outcome::Minus, Outcome::Minus};
}

inline std::pair<Outcome, Outcome> sample_pair(Angle alpha, Angle beta, const NoiseModel& noise,
                                               RandomStream& rng) {
    return sample_from(joint_probabilities(alpha, beta, noise), rng);
}

// Error rate of sifted keys at parallel settings under the depolarizing
// model; inverse of NoiseModel::for_qber.
inline double qber_for_visibility(const NoiseModel& noise) {
    noise.validate();
    return (1.0 - noise.visibility) * 0.5;
}

}  // namespace qkd
