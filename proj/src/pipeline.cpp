#include "qkd/pipeline.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "qkd/errors.hpp"

namespace qkd {

using ordered_json = nlohmann::ordered_json;

void RunConfig::validate() const {
    if (!(pair_rate_hz > 0.0) || !(path_efficiency > 0.0 && path_efficiency <= 1.0) ||
        !(duration_s >= 0.0)) {
        throw std::invalid_argument("RunConfig: bad source parameters");
    }
    NoiseModel{visibility}.validate();
    if (window_ns <= 0) throw std::invalid_argument("RunConfig: window must be positive");
    if (dwell_ns < 1) throw std::invalid_argument("RunConfig: dwell must be positive");
    if (!(qber_sample_fraction > 0.0 && qber_sample_fraction < 1.0)) {
        throw std::invalid_argument("RunConfig: qber sample fraction must be in (0, 1)");
    }
    if (ec_block_length != 0 && ec_block_length < 2) {
        throw std::invalid_argument("RunConfig: ec block length must be 0 (auto) or >= 2");
    }
    if (!(wigner_sigma_k >= 0.0) || !(qber_abort_threshold > 0.0 && qber_abort_threshold < 0.5)) {
        throw std::invalid_argument("RunConfig: bad decision thresholds");
    }
    clock_a.validate();
    clock_b.validate();
    attack.validate();
}

namespace {

std::vector<std::string> split(const std::string& s, char sep) {
    std::vector<std::string> out;
    std::string cur;
    for (char c : s) {
        if (c == sep) {
            out.push_back(cur);
            cur.clear();
        } else {
            cur += c;
        }
    }
    out.push_back(cur);
    return out;
}

std::string trim(const std::string& s) {
    size_t b = s.find_first_not_of(" \t\r");
    size_t e = s.find_last_not_of(" \t\r");
    if (b == std::string::npos) return "";
    return s.substr(b, e - b + 1);
}

double to_double(const std::string& v, const std::string& key) {
    try {
        size_t pos = 0;
        double d = std::stod(v, &pos);
        if (pos != v.size()) throw std::invalid_argument(v);
        return d;
    } catch (const std::exception&) {
        throw std::invalid_argument("config: bad number for " + key + ": " + v);
    }
}

int64_t to_i64(const std::string& v, const std::string& key) {
    try {
        size_t pos = 0;
        long long d = std::stoll(v, &pos);
        if (pos != v.size()) throw std::invalid_argument(v);
        return d;
    } catch (const std::exception&) {
        throw std::invalid_argument("config: bad integer for " + key + ": " + v);
    }
}

std::vector<double> to_double_list(const std::string& v, const std::string& key) {
    std::vector<double> out;
    for (const auto& tok : split(v, ',')) {
        out.push_back(to_double(trim(tok), key));
    }
    return out;
}

}  // namespace

RunConfig parse_run_config(const std::string& text) {
    RunConfig cfg;
    std::vector<Angle> eve_bases;
    std::vector<double> eve_probs;
    bool intercept = false;

    std::istringstream in(text);
    std::string raw;
    while (std::getline(in, raw)) {
        const std::string line = trim(raw);
        if (line.empty() || line[0] == '#') continue;
        const size_t eq = line.find('=');
        if (eq == std::string::npos) {
            throw std::invalid_argument("config: expected key=value, got: " + line);
        }
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));

        if (key == "protocol") {
            if (value == "wigner") {
                cfg.kind = ProtocolKind::Wigner;
            } else if (value == "bb84") {
                cfg.kind = ProtocolKind::BB84;
            } else {
                throw std::invalid_argument("config: unknown protocol: " + value);
            }
        } else if (key == "seed") {
            cfg.seed = static_cast<uint64_t>(to_i64(value, key));
        } else if (key == "pair_rate") {
            cfg.pair_rate_hz = to_double(value, key);
        } else if (key == "efficiency") {
            cfg.path_efficiency = to_double(value, key);
        } else if (key == "duration") {
            cfg.duration_s = to_double(value, key);
        } else if (key == "visibility") {
            cfg.visibility = to_double(value, key);
        } else if (key == "window_ns") {
            cfg.window_ns = to_i64(value, key);
        } else if (key == "dwell_ns") {
            cfg.dwell_ns = to_i64(value, key);
        } else if (key == "drift_a") {
            cfg.clock_a.drift_ns_per_min = to_double(value, key);
        } else if (key == "jitter_a") {
            cfg.clock_a.jitter_sigma_ns = to_double(value, key);
        } else if (key == "drift_b") {
            cfg.clock_b.drift_ns_per_min = to_double(value, key);
        } else if (key == "jitter_b") {
            cfg.clock_b.jitter_sigma_ns = to_double(value, key);
        } else if (key == "attack") {
            if (value == "none") {
                intercept = false;
            } else if (value == "intercept-resend") {
                intercept = true;
            } else {
                throw std::invalid_argument("config: unknown attack: " + value);
            }
        } else if (key == "eve_bases") {
            for (double d : to_double_list(value, key)) eve_bases.push_back(Angle(d));
        } else if (key == "eve_probs") {
            eve_probs = to_double_list(value, key);
        } else if (key == "qber_fraction") {
            cfg.qber_sample_fraction = to_double(value, key);
        } else if (key == "ec_block") {
            cfg.ec_block_length = static_cast<int>(to_i64(value, key));
        } else if (key == "wigner_sigma_k") {
            cfg.wigner_sigma_k = to_double(value, key);
        } else if (key == "qber_threshold") {
            cfg.qber_abort_threshold = to_double(value, key);
        } else if (key == "offset_correction") {
            cfg.offset_correction = to_i64(value, key) != 0;
        } else if (key == "run_id") {
            cfg.run_id = value;
        } else if (key == "dump_streams") {
            cfg.dump_streams_dir = value;
        } else {
            throw std::invalid_argument("config: unknown key: " + key);
        }
    }

    if (intercept) {
        cfg.attack = AttackModel::intercept_resend(eve_bases, eve_probs);
    }
    cfg.validate();
    return cfg;
}

RunConfig read_run_config_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("config: cannot open " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_run_config(buf.str());
}

namespace {

ordered_json config_json(const RunConfig& c, const std::string& run_id) {
    ordered_json j;
    j["stage"] = "config";
    j["protocol"] = protocol_name(c.kind);
    j["seed"] = c.seed;
    j["run_id"] = run_id;
    j["pair_rate_hz"] = c.pair_rate_hz;
    j["path_efficiency"] = c.path_efficiency;
    j["duration_s"] = c.duration_s;
    j["visibility"] = c.visibility;
    j["window_ns"] = c.window_ns;
    j["dwell_ns"] = c.dwell_ns;
    j["drift_a_ns_per_min"] = c.clock_a.drift_ns_per_min;
    j["jitter_a_ns"] = c.clock_a.jitter_sigma_ns;
    j["drift_b_ns_per_min"] = c.clock_b.drift_ns_per_min;
    j["jitter_b_ns"] = c.clock_b.jitter_sigma_ns;
    j["attack"] = c.attack.kind == AttackKind::None ? "none" : "intercept-resend";
    if (c.attack.kind != AttackKind::None) {
        ordered_json bases = ordered_json::array();
        for (const Angle& a : c.attack.basis_set) bases.push_back(a.degrees());
        j["eve_bases_deg"] = bases;
    }
    j["qber_sample_fraction"] = c.qber_sample_fraction;
    j["ec_block_length"] = c.ec_block_length;
    j["wigner_sigma_k"] = c.wigner_sigma_k;
    j["qber_abort_threshold"] = c.qber_abort_threshold;
    j["offset_correction"] = c.offset_correction;
    return j;
}

// Classical conversation for one run. Every disclosure passes through the
// wire format; the channel log is auditable afterwards.
struct Session {
    DuplexChannel channel;

    void disclose_settings(const CoincidenceSet& coincidences) {
        SettingsDisclosure alice{Party::Alice, {}};
        SettingsDisclosure bob{Party::Bob, {}};
        alice.setting_indices.reserve(coincidences.records.size());
        bob.setting_indices.reserve(coincidences.records.size());
        for (const auto& r : coincidences.records) {
            alice.setting_indices.push_back(r.index_a);
            bob.setting_indices.push_back(r.index_b);
        }
        channel.send(Party::Alice, alice);
        channel.send(Party::Bob, bob);
        const auto from_alice = std::get<SettingsDisclosure>(channel.receive(Party::Bob));
        const auto from_bob = std::get<SettingsDisclosure>(channel.receive(Party::Alice));
        if (from_alice.setting_indices.size() != from_bob.setting_indices.size()) {
            throw ProtocolDesyncError("sift: disclosed setting lists differ in length");
        }
    }

    // Oblique-settings outcomes are sacrificed test data for the Wigner
    // estimator; both parties publish theirs.
    void disclose_oblique_outcomes(const CoincidenceSet& coincidences) {
        TestSubsetReveal alice{Party::Alice, {}, {}};
        TestSubsetReveal bob{Party::Bob, {}, {}};
        for (size_t i = 0; i < coincidences.records.size(); ++i) {
            const auto& r = coincidences.records[i];
            if (std::abs(r.setting_a.degrees() - r.setting_b.degrees()) < 1e-9) continue;
            alice.positions.push_back(static_cast<uint32_t>(i));
            alice.bits.push_back(outcome_to_bit(r.outcome_a));
            bob.positions.push_back(static_cast<uint32_t>(i));
            bob.bits.push_back(outcome_to_bit(r.outcome_b));
        }
        channel.send(Party::Alice, alice);
        channel.send(Party::Bob, bob);
        channel.receive(Party::Bob);
        channel.receive(Party::Alice);
    }

    void reveal_test_subset(const QberEstimate& est, const BitKey& alice, const BitKey& bob) {
        TestSubsetReveal from_alice{Party::Alice, est.revealed_positions, {}};
        for (uint32_t pos : est.revealed_positions) from_alice.bits.push_back(alice.bits[pos]);
        channel.send(Party::Alice, from_alice);
        const auto request = std::get<TestSubsetReveal>(channel.receive(Party::Bob));
        TestSubsetReveal from_bob{Party::Bob, request.positions, {}};
        uint64_t disagreements = 0;
        for (size_t i = 0; i < request.positions.size(); ++i) {
            const uint8_t bit = bob.bits[request.positions[i]];
            from_bob.bits.push_back(bit);
            if (bit != request.bits[i]) ++disagreements;
        }
        channel.send(Party::Bob, from_bob);
        channel.receive(Party::Alice);
        if (disagreements != est.disagreements) {
            throw ProtocolDesyncError("qber: endpoint disagreement counts differ");
        }
    }

    void finish() {
        channel.send(Party::Bob, Ack{0});
        channel.receive(Party::Alice);
    }
};

}  // namespace

RunOutcome run_pipeline(const RunConfig& config) {
    config.validate();
    RunOutcome out;
    out.config = config;

    const std::string run_id = config.run_id.empty()
                                   ? std::string(protocol_name(config.kind)) + "-" +
                                         std::to_string(config.seed)
                                   : config.run_id;

    std::vector<ordered_json> lines;
    lines.push_back(config_json(config, run_id));

    auto stage_error = [](const char* stage, const std::exception& e) {
        return std::runtime_error(std::string("stage ") + stage + ": " + e.what());
    };

    // generate + coincidence
    ProtocolRun run;
    const NoiseModel noise{config.visibility};
    try {
        SourceConfig source;
        source.pair_rate_hz = config.pair_rate_hz;
        source.path_efficiency = config.path_efficiency;
        source.duration_s = config.duration_s;
        source.switch_interval_ns = config.dwell_ns;
        const PairSampler sampler = config.attack.kind == AttackKind::None
                                        ? singlet_sampler(noise)
                                        : attacked_sampler(config.attack, noise);
        RandomStream root(config.seed);
        RandomStream stream_rng = root.derive(1);
        const auto schedule_a =
            make_schedule(config.kind, Party::Alice, config.dwell_ns, root.derive(2).seed());
        const auto schedule_b =
            make_schedule(config.kind, Party::Bob, config.dwell_ns, root.derive(3).seed());
        auto streams = generate_streams(source, config.clock_a, config.clock_b, schedule_a,
                                        schedule_b, sampler, stream_rng, run_id);
        run.emitted_pairs = streams.emitted_pairs;

        ordered_json g;
        g["stage"] = "generate";
        g["emitted_pairs"] = streams.emitted_pairs;
        g["singles_a"] = streams.alice.events.size();
        g["singles_b"] = streams.bob.events.size();
        if (config.duration_s > 0.0) {
            g["singles_rate_a_hz"] = static_cast<double>(streams.alice.events.size()) / config.duration_s;
            g["singles_rate_b_hz"] = static_cast<double>(streams.bob.events.size()) / config.duration_s;
        }
        if (streams.alice.events.empty() && streams.bob.events.empty()) {
            g["warning"] = "no detections in run";
        }
        if (!config.dump_streams_dir.empty()) {
            TimestampStream a = streams.alice;
            TimestampStream b = streams.bob;
            a.strip_ground_truth();
            b.strip_ground_truth();
            const std::string pa = config.dump_streams_dir + "/" + run_id + "-alice.tsv";
            const std::string pb = config.dump_streams_dir + "/" + run_id + "-bob.tsv";
            write_stream_file(pa, a);
            write_stream_file(pb, b);
            g["stream_a"] = pa;
            g["stream_b"] = pb;
        }
        lines.push_back(std::move(g));

        if (!streams.alice.events.empty() && !streams.bob.events.empty()) {
            run.coincidences = find_coincidences(
                streams.alice, streams.bob, config.window_ns,
                config.offset_correction ? OffsetCorrection::Enabled : OffsetCorrection::Disabled);
        }
        run.alice = std::move(streams.alice);
        run.bob = std::move(streams.bob);
    } catch (const std::exception& e) {
        throw stage_error("generate", e);
    }

    out.emitted_pairs = run.emitted_pairs;
    out.singles_a = run.alice.events.size();
    out.singles_b = run.bob.events.size();
    out.coincidence_count = run.coincidences.records.size();
    out.offset_ns = run.coincidences.offset_ns;

    {
        ordered_json c;
        c["stage"] = "coincidence";
        c["window_ns"] = config.window_ns;
        c["offset_ns"] = run.coincidences.offset_ns;
        c["count"] = run.coincidences.records.size();
        if (config.duration_s > 0.0) {
            c["rate_hz"] = static_cast<double>(run.coincidences.records.size()) / config.duration_s;
        }
        lines.push_back(std::move(c));
    }

    Session session;

    // sift
    try {
        session.disclose_settings(run.coincidences);
        out.sift = sift(config.kind, run.coincidences.records);
        ordered_json s;
        s["stage"] = "sift";
        s["total"] = out.sift.total;
        s["kept"] = out.sift.kept;
        s["fraction_kept"] = out.sift.total ? 1.0 - out.sift.discarded_fraction : 0.0;
        s["discarded_fraction"] = out.sift.discarded_fraction;
        if (config.duration_s > 0.0) {
            s["raw_key_rate_hz"] = static_cast<double>(out.sift.kept) / config.duration_s;
        }
        if (out.sift.empty_warning) s["warning"] = "no parallel-setting coincidences";
        lines.push_back(std::move(s));
    } catch (const std::exception& e) {
        throw stage_error("sift", e);
    }

    // wigner estimate (Wigner kind only)
    if (config.kind == ProtocolKind::Wigner) {
        try {
            session.disclose_oblique_outcomes(run.coincidences);
            out.wigner = wigner_test(run.coincidences.records);
            ordered_json w;
            w["stage"] = "wigner";
            w["w"] = out.wigner->w;
            w["std_error"] = out.wigner->std_error;
            ordered_json terms = ordered_json::array();
            for (const auto& t : out.wigner->terms) {
                ordered_json tj;
                tj["alice_deg"] = t.alice.degrees();
                tj["bob_deg"] = t.bob.degrees();
                tj["counts"] = {t.counts.c_pp, t.counts.c_pm, t.counts.c_mp, t.counts.c_mm};
                tj["p_pp"] = t.probability;
                tj["sigma"] = t.sigma;
                terms.push_back(std::move(tj));
            }
            w["terms"] = std::move(terms);
            lines.push_back(std::move(w));
        } catch (const std::exception& e) {
            throw stage_error("wigner", e);
        }
    }

    // qber estimate on the sifted keys
    BitKey alice_key;
    BitKey bob_key;
    try {
        RandomStream qber_rng = RandomStream(config.seed).derive(4);
        out.qber = estimate_qber(out.sift.alice, out.sift.bob, config.qber_sample_fraction, qber_rng);
        session.reveal_test_subset(out.qber, out.sift.alice, out.sift.bob);
        alice_key = remove_positions(out.sift.alice, out.qber.revealed_positions);
        bob_key = remove_positions(out.sift.bob, out.qber.revealed_positions);
        ordered_json q;
        q["stage"] = "qber";
        q["sample_fraction"] = config.qber_sample_fraction;
        q["compared"] = out.qber.compared;
        q["disagreements"] = out.qber.disagreements;
        q["qber"] = out.qber.qber;
        q["remaining_bits"] = alice_key.size();
        lines.push_back(std::move(q));
    } catch (const std::exception& e) {
        throw stage_error("qber", e);
    }

    // decision
    try {
        const DecisionThresholds thresholds{config.wigner_sigma_k, config.qber_abort_threshold};
        out.decision = security_decision(config.kind, out.wigner, out.qber.qber, thresholds);
        ordered_json d;
        d["stage"] = "decision";
        d["accept"] = out.decision.accept;
        d["reason"] = out.decision.reason;
        lines.push_back(std::move(d));
    } catch (const std::exception& e) {
        throw stage_error("decision", e);
    }

    // error correction (only on accept)
    if (out.decision.accept) {
        try {
            ECParams params;
            params.error_rate = std::clamp(out.qber.qber, 1e-6, 0.49);
            params.block_length = config.ec_block_length != 0 ? config.ec_block_length
                                                              : optimal_block(params.error_rate);
            const auto ec = parity_reduce(alice_key, bob_key, params, session.channel);
            out.ec = ec.report;
            out.alice_final = ec.alice;
            out.bob_final = ec.bob;
            ordered_json e;
            e["stage"] = "error_correction";
            e["block_length"] = params.block_length;
            e["auto_block"] = config.ec_block_length == 0;
            e["assumed_error_rate"] = params.error_rate;
            e["blocks_total"] = ec.report.blocks_total;
            e["blocks_kept"] = ec.report.blocks_kept;
            e["input_bits"] = ec.report.input_length;
            e["output_bits"] = ec.report.output_length;
            e["predicted_efficiency"] = ec.report.predicted_efficiency;
            e["realized_efficiency"] = ec.report.realized_efficiency;
            e["predicted_residual"] = ec.report.predicted_residual;
            e["realized_residual"] = ec.report.realized_residual;
            e["disclosed_parity_bits"] = ec.report.blocks_total;
            lines.push_back(std::move(e));
        } catch (const std::exception& e) {
            throw stage_error("error_correction", e);
        }
    } else {
        out.alice_final = BitKey{{}, KeyStage::Sifted, Party::Alice};
        out.bob_final = BitKey{{}, KeyStage::Sifted, Party::Bob};
    }

    session.finish();

    {
        ordered_json k;
        k["stage"] = "keys";
        k["accepted"] = out.decision.accept;
        k["stage_label"] = key_stage_name(out.alice_final.stage);
        k["alice_bits"] = out.alice_final.size();
        k["bob_bits"] = out.bob_final.size();
        if (config.duration_s > 0.0 && out.decision.accept) {
            k["final_key_rate_hz"] = static_cast<double>(out.alice_final.size()) / config.duration_s;
        }
        k["channel_messages"] = session.channel.wire_log().size();
        lines.push_back(std::move(k));
    }

    std::string report;
    for (const auto& line : lines) {
        report += line.dump();
        report += '\n';
    }
    out.report_jsonl = std::move(report);
    out.exit_code = out.decision.accept ? 0 : 2;
    return out;
}

std::vector<ECTableRow> ec_analyze(double p, int n_min, int n_max) {
    if (n_min < 2 || n_max < n_min) {
        throw std::invalid_argument("ec_analyze: bad block range");
    }
    std::vector<ECTableRow> rows;
    rows.reserve(static_cast<size_t>(n_max - n_min + 1));
    for (int n = n_min; n <= n_max; ++n) {
        rows.push_back({n, ec_efficiency(n, p), ec_residual_error(n, p)});
    }
    return rows;
}

}  // namespace qkd
