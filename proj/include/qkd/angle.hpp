#pragma once

#include <cmath>
#include <cstdint>
#include <stdexcept>

namespace qkd {

inline constexpr double kPi = 3.14159265358979323846;
inline constexpr double kDegToRad = kPi / 180.0;

// Polarization analyzer orientation in degrees. Analyzer axes have a 180
// degree period; the stored representative lives in [-90, 90) and
// normalization is idempotent.
class Angle {
public:
    Angle() = default;

    explicit Angle(double deg) {
        if (!std::isfinite(deg)) {
            throw std::invalid_argument("Angle: non-finite value");
        }
        deg_ = normalize(deg);
    }

    double degrees() const { return deg_; }
    double radians() const { return deg_ * kDegToRad; }

    friend bool operator==(Angle a, Angle b) { return a.deg_ == b.deg_; }
    friend bool operator!=(Angle a, Angle b) { return !(a == b); }

    static double normalize(double deg) {
        double r = std::fmod(deg, 180.0);
        if (r < -90.0) {
            r += 180.0;
        } else if (r >= 90.0) {
            r -= 180.0;
        }
        return r == 0.0 ? 0.0 : r;  // collapse -0.0
    }

private:
    double deg_ = 0.0;
};

// Signed analyzer-axis difference in radians.
inline double delta_radians(Angle a, Angle b) {
    return (a.degrees() - b.degrees()) * kDegToRad;
}

}  // namespace qkd
