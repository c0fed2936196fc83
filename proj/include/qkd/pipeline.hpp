#pragma once

#include <cstdint>
#include <optional>
#include <string>

#include "qkd/eavesdrop.hpp"
#include "qkd/parity_ec.hpp"
#include "qkd/protocol.hpp"

namespace qkd {

// One experiment run, fully determined by this configuration (the seed
// drives every random choice).
struct RunConfig {
    ProtocolKind kind = ProtocolKind::Wigner;
    uint64_t seed = 1;
    double pair_rate_hz = 7e5;
    double path_efficiency = 0.05;
    double duration_s = 5.0;
    double visibility = 1.0;
    int64_t window_ns = 4;
    int64_t dwell_ns = 100;
    ClockModel clock_a;
    ClockModel clock_b;
    AttackModel attack;
    double qber_sample_fraction = 0.10;
    int ec_block_length = 0;  // 0 = choose via optimal_block at the measured QBER
    double wigner_sigma_k = 3.0;
    double qber_abort_threshold = 0.11;
    bool offset_correction = true;
    std::string run_id;            // default: derived from the seed
    std::string dump_streams_dir;  // when set, detection streams are written here

    void validate() const;
};

// Flat key=value text, '#' comments. Unknown keys are rejected.
RunConfig parse_run_config(const std::string& text);
RunConfig read_run_config_file(const std::string& path);

struct RunOutcome {
    RunConfig config;
    uint64_t emitted_pairs = 0;
    uint64_t singles_a = 0;
    uint64_t singles_b = 0;
    uint64_t coincidence_count = 0;
    int64_t offset_ns = 0;
    SiftResult sift;
    QberEstimate qber;
    std::optional<WignerEstimate> wigner;
    Decision decision;
    std::optional<ECReport> ec;
    BitKey alice_final;
    BitKey bob_final;
    // One JSON object per pipeline stage, newline separated; byte-identical
    // for identical configs.
    std::string report_jsonl;
    int exit_code = 1;  // 0 accept, 2 abort
};

RunOutcome run_pipeline(const RunConfig& config);

// ec-analyze table row.
struct ECTableRow {
    int n = 0;
    double efficiency = 0.0;
    double residual = 0.0;
};

std::vector<ECTableRow> ec_analyze(double p, int n_min, int n_max);

}  // namespace qkd
