#include <doctest.h>

#include <cmath>

#include "qkd/singlet.hpp"

using namespace qkd;

namespace {

// 4-sigma binomial band around probability p at n samples.
bool within_binomial(double observed, double p, uint64_t n, double k_sigma) {
    const double sigma = std::sqrt(p * (1.0 - p) / static_cast<double>(n));
    return std::abs(observed - p) <= k_sigma * sigma;
}

}  // namespace

TEST_SUITE("singlet") {

TEST_CASE("angle normalization is periodic and idempotent") {
    CHECK(Angle(90.0).degrees() == doctest::Approx(-90.0));
    CHECK(Angle(-90.0).degrees() == doctest::Approx(-90.0));
    CHECK(Angle(180.0).degrees() == doctest::Approx(0.0));
    CHECK(Angle(-120.0).degrees() == doctest::Approx(60.0));
    CHECK(Angle(270.0).degrees() == doctest::Approx(-90.0));
    RandomStream rng(11);
    for (int i = 0; i < 200; ++i) {
        const double d = (rng.uniform() - 0.5) * 2000.0;
        const double once = Angle(d).degrees();
        CHECK(once >= -90.0);
        CHECK(once < 90.0);
        CHECK(Angle(once).degrees() == once);
    }
    CHECK_THROWS_AS(Angle(std::nan("")), std::invalid_argument);
    CHECK_THROWS_AS(Angle(INFINITY), std::invalid_argument);
}

TEST_CASE("joint probabilities reproduce the singlet law") {
    const NoiseModel clean{1.0};

    // p_++(0, 30) = 1/2 sin^2(30 deg) = 1/8
    auto jp = joint_probabilities(Angle(0), Angle(30), clean);
    CHECK(jp.p_pp == doctest::Approx(0.125).epsilon(1e-12));
    CHECK(jp.p_mm == doctest::Approx(0.125).epsilon(1e-12));

    // p_++(-30, 30) = 1/2 sin^2(60 deg) = 3/8
    jp = joint_probabilities(Angle(-30), Angle(30), clean);
    CHECK(jp.p_pp == doctest::Approx(0.375).epsilon(1e-12));

    // parallel axes: perfect anticorrelation
    jp = joint_probabilities(Angle(0), Angle(0), clean);
    CHECK(jp.p_pp == 0.0);
    CHECK(jp.p_mm == 0.0);
    CHECK(jp.p_pm == doctest::Approx(0.5).epsilon(1e-12));

    // V = 0.95 at parallel settings: error cells (1-V)/4 = 0.0125 each
    jp = joint_probabilities(Angle(0), Angle(0), NoiseModel{0.95});
    CHECK(jp.p_pp == doctest::Approx(0.0125).epsilon(1e-12));
    CHECK(jp.same_outcome() == doctest::Approx(0.025).epsilon(1e-12));
}

TEST_CASE("joint probabilities normalize, symmetrize, and have 180deg period") {
    RandomStream rng(17);
    for (int i = 0; i < 300; ++i) {
        const double a = (rng.uniform() - 0.5) * 720.0;
        const double b = (rng.uniform() - 0.5) * 720.0;
        const NoiseModel noise{rng.uniform()};
        const auto jp = joint_probabilities(Angle(a), Angle(b), noise);
        CHECK(std::abs(jp.sum() - 1.0) < 1e-12);
        CHECK(jp.p_pp >= 0.0);
        CHECK(jp.p_pm >= 0.0);

        const auto swapped = joint_probabilities(Angle(b), Angle(a), noise);
        CHECK(jp.p_pp == doctest::Approx(swapped.p_pp).epsilon(1e-12));
        CHECK(jp.p_pm == doctest::Approx(swapped.p_mp).epsilon(1e-12));
        CHECK(jp.p_mp == doctest::Approx(swapped.p_pm).epsilon(1e-12));

        const auto shifted = joint_probabilities(Angle(a + 180.0), Angle(b), noise);
        CHECK(std::abs(jp.p_pp - shifted.p_pp) < 1e-12);
        CHECK(std::abs(jp.p_pm - shifted.p_pm) < 1e-12);
    }
}

TEST_CASE("noise model validates and maps to QBER") {
    CHECK(qber_for_visibility(NoiseModel{1.0}) == 0.0);
    CHECK(qber_for_visibility(NoiseModel{0.95}) == doctest::Approx(0.025).epsilon(1e-12));
    CHECK(qber_for_visibility(NoiseModel{0.932}) == doctest::Approx(0.034).epsilon(1e-12));
    CHECK(NoiseModel::for_qber(0.025).visibility == doctest::Approx(0.95).epsilon(1e-12));
    CHECK_THROWS_AS(joint_probabilities(Angle(0), Angle(0), NoiseModel{1.2}),
                    std::invalid_argument);
    CHECK_THROWS_AS(joint_probabilities(Angle(0), Angle(0), NoiseModel{-0.1}),
                    std::invalid_argument);
}

TEST_CASE("samples at parallel settings are strictly anticorrelated when clean") {
    RandomStream rng(23);
    const NoiseModel clean{1.0};
    for (int i = 0; i < 2000; ++i) {
        const auto [a, b] = sample_pair(Angle(0), Angle(0), clean, rng);
        CHECK(a != b);
    }
}

TEST_CASE("sampled frequencies match the closed form") {
    RandomStream rng(29);
    const uint64_t n = 1000000;

    uint64_t pp = 0;
    for (uint64_t i = 0; i < n; ++i) {
        const auto [a, b] = sample_pair(Angle(0), Angle(30), NoiseModel{1.0}, rng);
        if (a == Outcome::Plus && b == Outcome::Plus) ++pp;
    }
    // 3-sigma band around 1/8 is +-0.001 at 1e6 samples
    CHECK(std::abs(static_cast<double>(pp) / static_cast<double>(n) - 0.125) < 0.001);

    const auto jp = joint_probabilities(Angle(-30), Angle(30), NoiseModel{0.932});
    uint64_t pp2 = 0;
    for (uint64_t i = 0; i < n; ++i) {
        const auto [a, b] = sample_pair(Angle(-30), Angle(30), NoiseModel{0.932}, rng);
        if (a == Outcome::Plus && b == Outcome::Plus) ++pp2;
    }
    CHECK(within_binomial(static_cast<double>(pp2) / static_cast<double>(n), jp.p_pp, n, 3.0));
}

TEST_CASE("all four cells converge for random settings") {
    RandomStream seed_rng(31);
    for (int trial = 0; trial < 4; ++trial) {
        const Angle a((seed_rng.uniform() - 0.5) * 180.0);
        const Angle b((seed_rng.uniform() - 0.5) * 180.0);
        const NoiseModel noise{0.5 + 0.5 * seed_rng.uniform()};
        const auto jp = joint_probabilities(a, b, noise);
        RandomStream rng = seed_rng.derive(static_cast<uint64_t>(trial));
        const uint64_t n = 100000;
        uint64_t c[4] = {0, 0, 0, 0};
        for (uint64_t i = 0; i < n; ++i) {
            const auto [oa, ob] = sample_pair(a, b, noise, rng);
            const int idx = (oa == Outcome::Plus ? 0 : 2) + (ob == Outcome::Plus ? 0 : 1);
            ++c[idx];
        }
        const double expected[4] = {jp.p_pp, jp.p_pm, jp.p_mp, jp.p_mm};
        for (int k = 0; k < 4; ++k) {
            CHECK(within_binomial(static_cast<double>(c[k]) / static_cast<double>(n), expected[k],
                                  n, 4.0));
        }
    }
}

TEST_CASE("identical seeds give identical outcome streams") {
    RandomStream r1(12345);
    RandomStream r2(12345);
    for (int i = 0; i < 5000; ++i) {
        const auto p1 = sample_pair(Angle(-30), Angle(30), NoiseModel{0.9}, r1);
        const auto p2 = sample_pair(Angle(-30), Angle(30), NoiseModel{0.9}, r2);
        REQUIRE(p1 == p2);
    }
    // derived streams are independent of sibling order
    RandomStream base(7);
    CHECK(base.derive(1).seed() != base.derive(2).seed());
    CHECK(base.derive(1).seed() == RandomStream(7).derive(1).seed());
}

}  // TEST_SUITE
