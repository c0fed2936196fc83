#include "qkd/timetag.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>

#include "qkd/errors.hpp"

namespace qkd {

void ClockModel::validate() const {
    if (!(std::isfinite(drift_ns_per_min) && std::isfinite(jitter_sigma_ns))) {
        throw std::invalid_argument("ClockModel: non-finite parameter");
    }
    if (jitter_sigma_ns < 0.0) {
        throw std::invalid_argument("ClockModel: negative jitter");
    }
    if (std::abs(drift_ns_per_min) > max_drift_ns_per_min) {
        throw std::invalid_argument("ClockModel: drift exceeds the stability bound");
    }
}

void SourceConfig::validate() const {
    if (!(pair_rate_hz > 0.0)) {
        throw std::invalid_argument("SourceConfig: pair rate must be positive");
    }
    if (!(path_efficiency > 0.0 && path_efficiency <= 1.0)) {
        throw std::invalid_argument("SourceConfig: path efficiency must be in (0, 1]");
    }
    if (!(duration_s >= 0.0)) {
        throw std::invalid_argument("SourceConfig: negative duration");
    }
    if (switch_interval_ns <= 0) {
        throw std::invalid_argument("SourceConfig: switch interval must be positive");
    }
}

PairSampler singlet_sampler(const NoiseModel& noise) {
    noise.validate();
    return [noise](Angle a, Angle b, RandomStream& rng) { return sample_pair(a, b, noise, rng); };
}

namespace {

struct PendingEvent {
    double time_ns;
    uint64_t emission_id;
    uint8_t setting_index;
    Outcome outcome;
};

// Sort by corrupted clock reading, quantize to integer ns, and force the
// strictly-increasing invariant by bumping collisions forward.
void finalize_stream(std::vector<PendingEvent>& pending, TimestampStream& out) {
    std::sort(pending.begin(), pending.end(), [](const PendingEvent& x, const PendingEvent& y) {
        if (x.time_ns != y.time_ns) return x.time_ns < y.time_ns;
        return x.emission_id < y.emission_id;
    });
    out.events.reserve(pending.size());
    out.emission_ids.reserve(pending.size());
    int64_t prev = -1;
    for (const PendingEvent& e : pending) {
        int64_t t = std::llround(std::max(e.time_ns, 0.0));
        if (t <= prev) t = prev + 1;
        prev = t;
        out.events.push_back({t, e.setting_index, e.outcome});
        out.emission_ids.push_back(e.emission_id);
    }
}

}  // namespace

StreamPair generate_streams(const SourceConfig& source, const ClockModel& clock_a,
                            const ClockModel& clock_b, const SettingSchedule& schedule_a,
                            const SettingSchedule& schedule_b, const PairSampler& sampler,
                            RandomStream& rng, const std::string& run_id) {
    source.validate();
    clock_a.validate();
    clock_b.validate();
    if (schedule_a.dwell_ns() < source.switch_interval_ns ||
        schedule_b.dwell_ns() < source.switch_interval_ns) {
        throw std::invalid_argument("generate_streams: dwell below the minimum switching interval");
    }

    StreamPair result;
    result.alice.party = Party::Alice;
    result.bob.party = Party::Bob;
    result.alice.run_id = result.bob.run_id = run_id;
    result.alice.settings = schedule_a.settings();
    result.bob.settings = schedule_b.settings();
    result.alice.dwell_ns = schedule_a.dwell_ns();
    result.bob.dwell_ns = schedule_b.dwell_ns();

    const double duration_ns = source.duration_s * 1e9;
    const size_t expect =
        static_cast<size_t>(source.pair_rate_hz * source.duration_s * source.path_efficiency * 1.2) + 16;
    std::vector<PendingEvent> pending_a;
    std::vector<PendingEvent> pending_b;
    pending_a.reserve(expect);
    pending_b.reserve(expect);

    const double drift_a = clock_a.drift_ns_per_min / 60e9;  // ns of drift per true ns
    const double drift_b = clock_b.drift_ns_per_min / 60e9;

    double t_ns = 0.0;
    uint64_t emission_id = 0;
    const double mean_gap_ns = 1e9 / source.pair_rate_hz;
    while (true) {
        t_ns += rng.exponential(1.0) * mean_gap_ns;
        if (t_ns >= duration_ns) break;
        const int64_t slot_time = static_cast<int64_t>(t_ns);
        const int ia = schedule_a.index_at(slot_time);
        const int ib = schedule_b.index_at(slot_time);
        const auto [oa, ob] =
            sampler(schedule_a.settings()[ia], schedule_b.settings()[ib], rng);
        const bool keep_a = rng.bernoulli(source.path_efficiency);
        const bool keep_b = rng.bernoulli(source.path_efficiency);
        if (keep_a) {
            double rec = t_ns + drift_a * t_ns;
            if (clock_a.jitter_sigma_ns > 0.0) rec += rng.normal(0.0, clock_a.jitter_sigma_ns);
            pending_a.push_back({rec, emission_id, static_cast<uint8_t>(ia), oa});
        }
        if (keep_b) {
            double rec = t_ns + drift_b * t_ns;
            if (clock_b.jitter_sigma_ns > 0.0) rec += rng.normal(0.0, clock_b.jitter_sigma_ns);
            pending_b.push_back({rec, emission_id, static_cast<uint8_t>(ib), ob});
        }
        ++emission_id;
    }
    result.emitted_pairs = emission_id;

    finalize_stream(pending_a, result.alice);
    finalize_stream(pending_b, result.bob);
    return result;
}

StreamPair generate_streams(const SourceConfig& source, const ClockModel& clock_a,
                            const ClockModel& clock_b, const SettingSchedule& schedule_a,
                            const SettingSchedule& schedule_b, const NoiseModel& noise,
                            RandomStream& rng, const std::string& run_id) {
    return generate_streams(source, clock_a, clock_b, schedule_a, schedule_b,
                            singlet_sampler(noise), rng, run_id);
}

namespace {

void require_sorted(const TimestampStream& s, const char* which) {
    for (size_t i = 1; i < s.events.size(); ++i) {
        if (s.events[i].time_ns <= s.events[i - 1].time_ns) {
            throw std::invalid_argument(std::string("find_coincidences: ") + which +
                                        " stream not strictly increasing");
        }
    }
}

}  // namespace

CoincidenceSet find_coincidences(const TimestampStream& a, const TimestampStream& b,
                                 int64_t window_ns, OffsetCorrection correction) {
    if (window_ns <= 0) {
        throw std::invalid_argument("find_coincidences: window must be positive");
    }
    require_sorted(a, "first");
    require_sorted(b, "second");

    CoincidenceSet out;
    if (a.events.empty() || b.events.empty()) return out;

    if (correction == OffsetCorrection::Enabled) {
        const int64_t span = std::max<int64_t>(64 * window_ns, 256);
        out.offset_ns = estimate_offset(a, b, span, std::max<int64_t>(1, window_ns / 4));
    }

    const bool truth = a.has_ground_truth() && b.has_ground_truth();
    const auto& ea = a.events;
    const auto& eb = b.events;
    size_t i = 0;
    size_t j = 0;
    while (i < ea.size() && j < eb.size()) {
        const int64_t ta = ea[i].time_ns;
        const int64_t tb = eb[j].time_ns - out.offset_ns;
        if (tb - ta > window_ns) {
            ++i;
            continue;
        }
        if (ta - tb > window_ns) {
            ++j;
            continue;
        }
        // Within the window. Prefer the nearer of b[j], b[j+1] for a[i].
        if (j + 1 < eb.size()) {
            const int64_t tb_next = eb[j + 1].time_ns - out.offset_ns;
            if (std::abs(tb_next - ta) < std::abs(tb - ta)) {
                ++j;
                continue;
            }
        }
        const auto& va = ea[i];
        const auto& vb = eb[j];
        out.records.push_back({va.time_ns, vb.time_ns, a.settings.at(va.setting_index),
                               b.settings.at(vb.setting_index), va.setting_index, vb.setting_index,
                               va.outcome, vb.outcome});
        if (truth) {
            out.emission_a.push_back(a.emission_ids[i]);
            out.emission_b.push_back(b.emission_ids[j]);
        }
        ++i;
        ++j;
    }
    return out;
}

int64_t estimate_offset(const TimestampStream& a, const TimestampStream& b, int64_t search_span_ns,
                        int64_t bin_ns) {
    if (a.events.empty() || b.events.empty()) {
        throw std::invalid_argument("estimate_offset: empty stream");
    }
    if (bin_ns <= 0 || search_span_ns < bin_ns) {
        throw std::invalid_argument("estimate_offset: bad span/bin");
    }

    const size_t nbins = static_cast<size_t>(2 * search_span_ns / bin_ns) + 1;
    std::vector<uint64_t> hist(nbins, 0);

    size_t j0 = 0;
    for (const auto& ev : a.events) {
        const int64_t lo = ev.time_ns - search_span_ns;
        const int64_t hi = ev.time_ns + search_span_ns;
        while (j0 < b.events.size() && b.events[j0].time_ns < lo) ++j0;
        for (size_t j = j0; j < b.events.size() && b.events[j].time_ns <= hi; ++j) {
            const int64_t d = b.events[j].time_ns - ev.time_ns;
            hist[static_cast<size_t>((d + search_span_ns) / bin_ns)]++;
        }
    }

    size_t peak = 0;
    for (size_t k = 1; k < nbins; ++k) {
        if (hist[k] > hist[peak]) peak = k;
    }

    // Background from all bins away from the peak neighborhood.
    double bg_sum = 0.0;
    size_t bg_n = 0;
    for (size_t k = 0; k < nbins; ++k) {
        if (k + 2 >= peak && k <= peak + 2) continue;
        bg_sum += static_cast<double>(hist[k]);
        ++bg_n;
    }
    const double bg = bg_n ? bg_sum / static_cast<double>(bg_n) : 0.0;
    const double threshold = bg + 6.0 * std::sqrt(bg + 1.0) + 3.0;
    if (static_cast<double>(hist[peak]) <= threshold) {
        throw NoSignalError("estimate_offset: no peak above accidental background");
    }

    // Centroid over the peak bin and its neighbors.
    double wsum = 0.0;
    double csum = 0.0;
    for (size_t k = (peak == 0 ? 0 : peak - 1); k <= std::min(peak + 1, nbins - 1); ++k) {
        const double center = static_cast<double>(-search_span_ns) +
                              (static_cast<double>(k) + 0.5) * static_cast<double>(bin_ns);
        wsum += static_cast<double>(hist[k]) * center;
        csum += static_cast<double>(hist[k]);
    }
    return std::llround(wsum / csum);
}

SourceStats source_stats(double singles_a_hz, double singles_b_hz, double coincidences_hz,
                         double window_ns) {
    if (!(singles_a_hz > 0.0) || !(singles_b_hz > 0.0)) {
        throw std::invalid_argument("source_stats: singles rates must be positive");
    }
    if (!(window_ns > 0.0)) {
        throw std::invalid_argument("source_stats: window must be positive");
    }
    if (!(coincidences_hz > 0.0)) {
        throw UndefinedEstimateError("source_stats: zero coincidence rate");
    }
    SourceStats s;
    s.efficiency_a = coincidences_hz / singles_b_hz;
    s.efficiency_b = coincidences_hz / singles_a_hz;
    s.pair_rate_hz = singles_a_hz * singles_b_hz / coincidences_hz;
    s.two_pair_ratio = s.pair_rate_hz * window_ns * 1e-9;
    return s;
}

namespace {

std::string format_double(double v) {
    char buf[32];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
    (void)ec;
    return std::string(buf, ptr);
}

double parse_double(std::string_view sv, const char* what) {
    double v = 0.0;
    auto [ptr, ec] = std::from_chars(sv.data(), sv.data() + sv.size(), v);
    if (ec != std::errc() || ptr != sv.data() + sv.size()) {
        throw std::invalid_argument(std::string("parse_stream: bad ") + what);
    }
    return v;
}

int64_t parse_i64(std::string_view sv, const char* what) {
    int64_t v = 0;
    auto [ptr, ec] = std::from_chars(sv.data(), sv.data() + sv.size(), v);
    if (ec != std::errc() || ptr != sv.data() + sv.size()) {
        throw std::invalid_argument(std::string("parse_stream: bad ") + what);
    }
    return v;
}

}  // namespace

std::string serialize_stream(const TimestampStream& s) {
    if (s.run_id.empty() || s.run_id.find_first_of(" \t\n") != std::string::npos) {
        throw std::invalid_argument("serialize_stream: run id must be non-empty, no whitespace");
    }
    std::string out;
    out += "# party ";
    out += party_name(s.party);
    out += "\n# run ";
    out += s.run_id;
    out += "\n# schedule dwell_ns=";
    out += std::to_string(s.dwell_ns);
    out += " settings=";
    for (size_t i = 0; i < s.settings.size(); ++i) {
        if (i) out += ',';
        out += format_double(s.settings[i].degrees());
    }
    out += '\n';
    for (const auto& e : s.events) {
        out += std::to_string(e.time_ns);
        out += '\t';
        out += std::to_string(e.setting_index);
        out += '\t';
        out += (e.outcome == Outcome::Plus) ? "+1" : "-1";
        out += '\n';
    }
    return out;
}

TimestampStream parse_stream(const std::string& text) {
    std::istringstream in(text);
    std::string line;
    TimestampStream s;

    auto next_line = [&](const char* what) {
        if (!std::getline(in, line)) {
            throw std::invalid_argument(std::string("parse_stream: missing ") + what);
        }
    };

    next_line("party header");
    if (line.rfind("# party ", 0) != 0) throw std::invalid_argument("parse_stream: bad party header");
    const std::string party = line.substr(8);
    if (party == "Alice") {
        s.party = Party::Alice;
    } else if (party == "Bob") {
        s.party = Party::Bob;
    } else {
        throw std::invalid_argument("parse_stream: unknown party");
    }

    next_line("run header");
    if (line.rfind("# run ", 0) != 0) throw std::invalid_argument("parse_stream: bad run header");
    s.run_id = line.substr(6);
    if (s.run_id.empty()) throw std::invalid_argument("parse_stream: empty run id");

    next_line("schedule header");
    if (line.rfind("# schedule dwell_ns=", 0) != 0) {
        throw std::invalid_argument("parse_stream: bad schedule header");
    }
    const size_t sep = line.find(" settings=");
    if (sep == std::string::npos) throw std::invalid_argument("parse_stream: bad schedule header");
    s.dwell_ns = parse_i64({line.data() + 20, sep - 20}, "dwell");
    std::string_view angles(line.data() + sep + 10, line.size() - sep - 10);
    while (!angles.empty()) {
        const size_t comma = angles.find(',');
        const std::string_view tok = angles.substr(0, comma);
        s.settings.push_back(Angle(parse_double(tok, "setting angle")));
        if (comma == std::string_view::npos) break;
        angles.remove_prefix(comma + 1);
    }
    if (s.settings.empty()) throw std::invalid_argument("parse_stream: no settings");

    int64_t prev = -1;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        const size_t t1 = line.find('\t');
        const size_t t2 = (t1 == std::string::npos) ? std::string::npos : line.find('\t', t1 + 1);
        if (t2 == std::string::npos) throw std::invalid_argument("parse_stream: bad event line");
        const int64_t t = parse_i64({line.data(), t1}, "time");
        const int64_t idx = parse_i64({line.data() + t1 + 1, t2 - t1 - 1}, "setting index");
        const std::string_view otok(line.data() + t2 + 1, line.size() - t2 - 1);
        Outcome o;
        if (otok == "+1") {
            o = Outcome::Plus;
        } else if (otok == "-1") {
            o = Outcome::Minus;
        } else {
            throw std::invalid_argument("parse_stream: bad outcome token");
        }
        if (t < 0 || t <= prev) {
            throw std::invalid_argument("parse_stream: times not strictly increasing");
        }
        if (idx < 0 || static_cast<size_t>(idx) >= s.settings.size()) {
            throw std::invalid_argument("parse_stream: setting index out of range");
        }
        prev = t;
        s.events.push_back({t, static_cast<uint8_t>(idx), o});
    }
    return s;
}

void write_stream_file(const std::string& path, const TimestampStream& s) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("write_stream_file: cannot open " + path);
    const std::string text = serialize_stream(s);
    out.write(text.data(), static_cast<std::streamsize>(text.size()));
    if (!out) throw std::runtime_error("write_stream_file: write failed for " + path);
}

TimestampStream read_stream_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("read_stream_file: cannot open " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_stream(buf.str());
}

}  // namespace qkd
