#pragma once

#include <cstdint>
#include <numeric>
#include <stdexcept>
#include <vector>

#include "qkd/angle.hpp"
#include "qkd/rng.hpp"

namespace qkd {

// Analyzer setting schedule: the analyzer holds one setting per dwell slot
// and redraws it iid for the next slot. Lookup is counter-based (slot index
// hashed with the schedule seed), so the setting at an arbitrary time is
// O(1) and independent of emission history.
class SettingSchedule {
public:
    SettingSchedule(std::vector<Angle> settings, std::vector<double> probabilities,
                    int64_t dwell_ns, uint64_t seed)
        : settings_(std::move(settings)), dwell_ns_(dwell_ns), seed_(seed) {
        if (settings_.empty()) {
            throw std::invalid_argument("SettingSchedule: no settings");
        }
        if (dwell_ns_ <= 0) {
            throw std::invalid_argument("SettingSchedule: dwell must be positive");
        }
        if (probabilities.size() != settings_.size()) {
            throw std::invalid_argument("SettingSchedule: one probability per setting required");
        }
        double total = std::accumulate(probabilities.begin(), probabilities.end(), 0.0);
        if (!(total > 0.0)) {
            throw std::invalid_argument("SettingSchedule: probabilities must sum to a positive value");
        }
        cumulative_.reserve(probabilities.size());
        double acc = 0.0;
        for (double p : probabilities) {
            if (p < 0.0) throw std::invalid_argument("SettingSchedule: negative probability");
            acc += p / total;
            cumulative_.push_back(acc);
        }
        cumulative_.back() = 1.0;
    }

    static SettingSchedule uniform(std::vector<Angle> settings, int64_t dwell_ns, uint64_t seed) {
        std::vector<double> probs(settings.size(), 1.0);
        return SettingSchedule(std::move(settings), std::move(probs), dwell_ns, seed);
    }

    int index_at(int64_t time_ns) const {
        const uint64_t slot = static_cast<uint64_t>(time_ns) / static_cast<uint64_t>(dwell_ns_);
        const double u = static_cast<double>(mix64(mix64(slot) ^ seed_) >> 11) * 0x1.0p-53;
        for (size_t i = 0; i + 1 < cumulative_.size(); ++i) {
            if (u < cumulative_[i]) return static_cast<int>(i);
        }
        return static_cast<int>(cumulative_.size() - 1);
    }

    Angle angle_at(int64_t time_ns) const { return settings_[index_at(time_ns)]; }

    const std::vector<Angle>& settings() const { return settings_; }
    int64_t dwell_ns() const { return dwell_ns_; }
    uint64_t seed() const { return seed_; }

private:
    std::vector<Angle> settings_;
    std::vector<double> cumulative_;
    int64_t dwell_ns_;
    uint64_t seed_;
};

}  // namespace qkd
