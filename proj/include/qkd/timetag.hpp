#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "qkd/angle.hpp"
#include "qkd/bits.hpp"
#include "qkd/rng.hpp"
#include "qkd/schedule.hpp"
#include "qkd/singlet.hpp"

namespace qkd {

// Local time base relative to the shared run-start sync pulse. Drift is
// linear within a run; jitter is per-event Gaussian. The drift magnitude is
// validated against a stability bound (default 1 ns per minute).
struct ClockModel {
    double drift_ns_per_min = 0.0;
    double jitter_sigma_ns = 0.0;
    double max_drift_ns_per_min = 1.0;

    void validate() const;
};

struct SourceConfig {
    double pair_rate_hz = 7e5;
    double path_efficiency = 0.05;
    double duration_s = 1.0;
    int64_t switch_interval_ns = 100;  // minimum analyzer dwell

    void validate() const;
};

struct DetectionEvent {
    int64_t time_ns = 0;  // local clock, ns since the sync pulse
    uint8_t setting_index = 0;
    Outcome outcome = Outcome::Plus;
};

// One party's registered detections for a run, sorted strictly increasing
// in time. `emission_ids` carries ground-truth pair labels parallel to
// `events`; it is simulation metadata only and is dropped by serialization.
struct TimestampStream {
    Party party = Party::Alice;
    std::string run_id = "r0";
    std::vector<Angle> settings;
    int64_t dwell_ns = 100;
    std::vector<DetectionEvent> events;
    std::vector<uint64_t> emission_ids;

    bool has_ground_truth() const { return emission_ids.size() == events.size() && !events.empty(); }
    void strip_ground_truth() { emission_ids.clear(); }
};

// Outcome sampler for one emitted pair measured at the two given settings.
using PairSampler = std::function<std::pair<Outcome, Outcome>(Angle, Angle, RandomStream&)>;

PairSampler singlet_sampler(const NoiseModel& noise);

struct StreamPair {
    TimestampStream alice;
    TimestampStream bob;
    uint64_t emitted_pairs = 0;
};

// Simulate a run: pair emissions are a Poisson process at the source rate,
// each photon independently survives its path, outcomes are drawn from the
// sampler at the settings active at emission time, and each party records
// the arrival on its own (drifting, jittering) clock. A duration with zero
// events yields empty streams, not an error.
StreamPair generate_streams(const SourceConfig& source, const ClockModel& clock_a,
                            const ClockModel& clock_b, const SettingSchedule& schedule_a,
                            const SettingSchedule& schedule_b, const PairSampler& sampler,
                            RandomStream& rng, const std::string& run_id = "r0");

StreamPair generate_streams(const SourceConfig& source, const ClockModel& clock_a,
                            const ClockModel& clock_b, const SettingSchedule& schedule_a,
                            const SettingSchedule& schedule_b, const NoiseModel& noise,
                            RandomStream& rng, const std::string& run_id = "r0");

struct CoincidenceRecord {
    int64_t time_a_ns = 0;
    int64_t time_b_ns = 0;
    Angle setting_a;
    Angle setting_b;
    uint8_t index_a = 0;
    uint8_t index_b = 0;
    Outcome outcome_a = Outcome::Plus;
    Outcome outcome_b = Outcome::Plus;
};

struct CoincidenceSet {
    std::vector<CoincidenceRecord> records;
    // Ground-truth emission labels parallel to `records`, present when both
    // input streams carried them.
    std::vector<uint64_t> emission_a;
    std::vector<uint64_t> emission_b;
    int64_t offset_ns = 0;  // constant correction that was applied to stream B
};

enum class OffsetCorrection : uint8_t { Disabled = 0, Enabled = 1 };

// Greedy two-pointer matching of nearest events within the window, each
// detection used at most once. With correction enabled the constant offset
// between the time bases is estimated first and subtracted from stream B.
CoincidenceSet find_coincidences(const TimestampStream& a, const TimestampStream& b,
                                 int64_t window_ns, OffsetCorrection correction);

// Peak of the cross-correlation histogram of (t_b - t_a) over +-search_span.
// Throws NoSignalError when no bin stands above the accidental background.
int64_t estimate_offset(const TimestampStream& a, const TimestampStream& b,
                        int64_t search_span_ns, int64_t bin_ns);

struct SourceStats {
    double efficiency_a = 0.0;
    double efficiency_b = 0.0;
    double pair_rate_hz = 0.0;
    double two_pair_ratio = 0.0;
};

// Estimates from measured singles and coincidence rates:
//   efficiency_a = C/S_b, efficiency_b = C/S_a, pair rate = S_a S_b / C,
//   two-pair ratio = pair rate x window.
SourceStats source_stats(double singles_a_hz, double singles_b_hz, double coincidences_hz,
                         double window_ns);

// Line-oriented stream file: three '#' header lines (party, run id,
// schedule) followed by one event per line, time_ns<TAB>setting_index<TAB>
// outcome. Round-trips bit-exactly. Ground-truth labels are not written.
std::string serialize_stream(const TimestampStream& s);
TimestampStream parse_stream(const std::string& text);
void write_stream_file(const std::string& path, const TimestampStream& s);
TimestampStream read_stream_file(const std::string& path);

}  // namespace qkd
