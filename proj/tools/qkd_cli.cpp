// entqkd: entangled-pair key distribution simulator.
//
// Subcommands: run (full pipeline), ec-analyze (parity block-length table),
// otp (encrypt/decrypt 1-bit images with key files), attack-demo
// (intercept-resend comparison), stats (source estimates from rates).
//
// `run` exits 0 when the security check accepts, 2 when it aborts, 1 on
// error.

#include <cstdio>
#include <exception>
#include <fstream>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "qkd/otp.hpp"
#include "qkd/pipeline.hpp"

namespace {

using namespace qkd;

struct RunArgs {
    std::string config_path;
    std::string report_path;
    std::string key_out_prefix;
    std::string protocol;
    std::string attack;
    std::string eve_bases;
    std::string eve_probs;
    std::string run_id;
    std::string dump_streams;
    uint64_t seed = 0;
    double pair_rate = 0.0;
    double efficiency = 0.0;
    double duration = 0.0;
    double visibility = -1.0;
    int64_t window_ns = 0;
    int64_t dwell_ns = 0;
    double drift_a = 0.0, jitter_a = 0.0, drift_b = 0.0, jitter_b = 0.0;
    double qber_fraction = 0.0;
    int ec_block = -1;
    double wigner_sigma_k = -1.0;
    double qber_threshold = -1.0;
    int offset_correction = -1;
};

std::vector<double> parse_list(const std::string& csv, const char* what) {
    std::vector<double> out;
    std::string cur;
    std::istringstream in(csv);
    while (std::getline(in, cur, ',')) {
        try {
            out.push_back(std::stod(cur));
        } catch (const std::exception&) {
            throw std::invalid_argument(std::string("bad ") + what + ": " + cur);
        }
    }
    return out;
}

int cmd_run(const CLI::App& sub, const RunArgs& args) {
    RunConfig cfg;
    if (!args.config_path.empty()) cfg = read_run_config_file(args.config_path);

    if (sub.count("--protocol")) {
        if (args.protocol == "wigner") {
            cfg.kind = ProtocolKind::Wigner;
        } else if (args.protocol == "bb84") {
            cfg.kind = ProtocolKind::BB84;
        } else {
            throw std::invalid_argument("unknown protocol: " + args.protocol);
        }
    }
    if (sub.count("--seed")) cfg.seed = args.seed;
    if (sub.count("--pair-rate")) cfg.pair_rate_hz = args.pair_rate;
    if (sub.count("--efficiency")) cfg.path_efficiency = args.efficiency;
    if (sub.count("--duration")) cfg.duration_s = args.duration;
    if (sub.count("--visibility")) cfg.visibility = args.visibility;
    if (sub.count("--window-ns")) cfg.window_ns = args.window_ns;
    if (sub.count("--dwell-ns")) cfg.dwell_ns = args.dwell_ns;
    if (sub.count("--drift-a")) cfg.clock_a.drift_ns_per_min = args.drift_a;
    if (sub.count("--jitter-a")) cfg.clock_a.jitter_sigma_ns = args.jitter_a;
    if (sub.count("--drift-b")) cfg.clock_b.drift_ns_per_min = args.drift_b;
    if (sub.count("--jitter-b")) cfg.clock_b.jitter_sigma_ns = args.jitter_b;
    if (sub.count("--qber-fraction")) cfg.qber_sample_fraction = args.qber_fraction;
    if (sub.count("--ec-block")) cfg.ec_block_length = args.ec_block;
    if (sub.count("--wigner-sigma-k")) cfg.wigner_sigma_k = args.wigner_sigma_k;
    if (sub.count("--qber-threshold")) cfg.qber_abort_threshold = args.qber_threshold;
    if (sub.count("--offset-correction")) cfg.offset_correction = args.offset_correction != 0;
    if (sub.count("--run-id")) cfg.run_id = args.run_id;
    if (sub.count("--dump-streams")) cfg.dump_streams_dir = args.dump_streams;
    if (sub.count("--attack")) {
        if (args.attack == "none") {
            cfg.attack = AttackModel::none();
        } else if (args.attack == "intercept-resend") {
            std::vector<Angle> bases;
            for (double d : parse_list(args.eve_bases, "eve basis")) bases.push_back(Angle(d));
            std::vector<double> probs;
            if (sub.count("--eve-probs")) probs = parse_list(args.eve_probs, "eve probability");
            cfg.attack = AttackModel::intercept_resend(std::move(bases), std::move(probs));
        } else {
            throw std::invalid_argument("unknown attack: " + args.attack);
        }
    }

    const RunOutcome outcome = run_pipeline(cfg);

    if (args.report_path.empty()) {
        std::cout << outcome.report_jsonl;
    } else {
        std::ofstream out(args.report_path, std::ios::binary);
        if (!out) throw std::runtime_error("cannot open report file " + args.report_path);
        out << outcome.report_jsonl;
    }
    if (!args.key_out_prefix.empty() && outcome.decision.accept) {
        write_key_file(args.key_out_prefix + "-alice.key", outcome.alice_final);
        write_key_file(args.key_out_prefix + "-bob.key", outcome.bob_final);
    }
    std::cerr << protocol_name(cfg.kind) << " run " << (outcome.decision.accept ? "ACCEPT" : "ABORT")
              << ": " << outcome.decision.reason << "\n";
    return outcome.exit_code;
}

int cmd_ec_analyze(double p, int n_min, int n_max) {
    const auto rows = ec_analyze(p, n_min, n_max);
    int best = n_min;
    double best_eta = -1.0;
    std::printf("n\tefficiency\tresidual\n");
    for (const auto& row : rows) {
        std::printf("%d\t%.6f\t%.6f\n", row.n, row.efficiency, row.residual);
        if (row.efficiency > best_eta) {
            best_eta = row.efficiency;
            best = row.n;
        }
    }
    std::printf("optimal n=%d: efficiency %.4f, residual %.4f%%\n", best, best_eta,
                ec_residual_error(best, p) * 100.0);
    return 0;
}

int cmd_otp_encrypt(const std::string& image_path, const std::string& key_path,
                    const std::string& out_path, bool allow_raw) {
    const BitImage img = read_pbm(image_path);
    PadLedger ledger(read_key_file(key_path), /*require_corrected=*/!allow_raw);
    const Bits cipher = ledger.xor_apply(image_to_bits(img));
    write_packed_bits(out_path, cipher);
    std::fprintf(stderr, "encrypted %dx%d image (%zu bits), %zu pad bits left\n", img.width,
                 img.height, cipher.size(), ledger.remaining());
    return 0;
}

int cmd_otp_decrypt(const std::string& cipher_path, const std::string& key_path,
                    const std::string& out_path, int width, int height,
                    const std::string& reference_path, bool allow_raw) {
    const Bits cipher = read_packed_bits(cipher_path);
    BitImage reference;
    if (!reference_path.empty()) {
        reference = read_pbm(reference_path);
        if (width == 0) width = reference.width;
        if (height == 0) height = reference.height;
    }
    if (width <= 0 || height <= 0) {
        throw std::invalid_argument("decrypt needs --width/--height or --reference");
    }
    PadLedger ledger(read_key_file(key_path), /*require_corrected=*/!allow_raw);
    const Bits plain = ledger.xor_apply(cipher);
    const BitImage img = bits_to_image(plain, width, height);
    write_pbm(out_path, img);
    if (!reference_path.empty()) {
        const size_t errors = hamming_distance(img.bits, reference.bits);
        std::fprintf(stderr, "decrypted image: %zu of %zu pixels differ from reference (%.4f%%)\n",
                     errors, img.bits.size(),
                     100.0 * static_cast<double>(errors) / static_cast<double>(img.bits.size()));
    }
    return 0;
}

int cmd_attack_demo(const std::string& protocol, const std::string& bases_csv, uint64_t pairs,
                    uint64_t seed, double visibility) {
    const ProtocolKind kind = protocol == "bb84" ? ProtocolKind::BB84 : ProtocolKind::Wigner;
    std::vector<Angle> bases;
    for (double d : parse_list(bases_csv, "eve basis")) bases.push_back(Angle(d));
    const auto report = attack_report(kind, AttackModel::intercept_resend(std::move(bases)), pairs,
                                      NoiseModel{visibility}, seed);
    const char* stat = kind == ProtocolKind::Wigner ? "w" : "qber";
    std::printf("protocol: %s, %llu pairs\n", protocol_name(kind),
                static_cast<unsigned long long>(pairs));
    std::printf("clean:    %s = %+.5f +- %.5f, key error rate %.5f -> %s\n", stat,
                report.stat_clean, report.sigma_clean, report.key_qber_clean,
                report.decision_clean.accept ? "accept" : "abort");
    std::printf("attacked: %s = %+.5f +- %.5f, key error rate %.5f -> %s\n", stat,
                report.stat_attacked, report.sigma_attacked, report.key_qber_attacked,
                report.decision_attacked.accept ? "accept" : "abort");
    std::printf("eavesdropper detected: %s\n", report.detected ? "yes" : "no");
    return 0;
}

int cmd_stats(double singles_a, double singles_b, double coincidences, double window_ns) {
    const SourceStats s = source_stats(singles_a, singles_b, coincidences, window_ns);
    std::printf("efficiency_a:   %.6f\n", s.efficiency_a);
    std::printf("efficiency_b:   %.6f\n", s.efficiency_b);
    std::printf("pair_rate_hz:   %.1f\n", s.pair_rate_hz);
    std::printf("two_pair_ratio: %.3e\n", s.two_pair_ratio);
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"entangled-pair quantum key distribution simulator"};
    app.require_subcommand(1);

    // run
    RunArgs run_args;
    auto* run = app.add_subcommand("run", "run the full key distribution pipeline");
    run->add_option("--config", run_args.config_path, "key=value config file");
    run->add_option("--report", run_args.report_path, "write the JSON-lines report here");
    run->add_option("--key-out", run_args.key_out_prefix, "write final key files with this prefix");
    run->add_option("--protocol", run_args.protocol, "wigner|bb84");
    run->add_option("--seed", run_args.seed, "run seed (drives all randomness)");
    run->add_option("--pair-rate", run_args.pair_rate, "pair production rate, 1/s");
    run->add_option("--efficiency", run_args.efficiency, "per-photon path efficiency");
    run->add_option("--duration", run_args.duration, "run duration, s");
    run->add_option("--visibility", run_args.visibility, "singlet visibility V in [0,1]");
    run->add_option("--window-ns", run_args.window_ns, "coincidence window, ns");
    run->add_option("--dwell-ns", run_args.dwell_ns, "analyzer dwell per random setting, ns");
    run->add_option("--drift-a", run_args.drift_a, "Alice clock drift, ns/min");
    run->add_option("--jitter-a", run_args.jitter_a, "Alice clock jitter sigma, ns");
    run->add_option("--drift-b", run_args.drift_b, "Bob clock drift, ns/min");
    run->add_option("--jitter-b", run_args.jitter_b, "Bob clock jitter sigma, ns");
    run->add_option("--attack", run_args.attack, "none|intercept-resend");
    run->add_option("--eve-bases", run_args.eve_bases, "Eve analyzer bases, deg (csv)");
    run->add_option("--eve-probs", run_args.eve_probs, "Eve basis probabilities (csv)");
    run->add_option("--qber-fraction", run_args.qber_fraction, "key fraction sacrificed for QBER");
    run->add_option("--ec-block", run_args.ec_block, "parity block length (0 = auto)");
    run->add_option("--wigner-sigma-k", run_args.wigner_sigma_k, "sigma margin for the Wigner test");
    run->add_option("--qber-threshold", run_args.qber_threshold, "abort threshold for BB84 QBER");
    run->add_option("--offset-correction", run_args.offset_correction,
                    "1 = correct inter-clock offset before matching");
    run->add_option("--run-id", run_args.run_id, "run identifier used in stream headers");
    run->add_option("--dump-streams", run_args.dump_streams, "directory for detection stream files");

    // ec-analyze
    double ec_p = 0.025;
    int ec_min = 2;
    int ec_max = 64;
    auto* ec = app.add_subcommand("ec-analyze", "parity error-reduction block-length table");
    ec->add_option("--error-rate", ec_p, "assumed bit error rate p")->required();
    ec->add_option("--n-min", ec_min, "smallest block length");
    ec->add_option("--n-max", ec_max, "largest block length");

    // otp
    auto* otp = app.add_subcommand("otp", "one-time-pad image transfer");
    otp->require_subcommand(1);
    std::string otp_image, otp_key, otp_out, otp_cipher, otp_reference;
    int otp_w = 0;
    int otp_h = 0;
    bool otp_allow_raw = false;
    auto* enc = otp->add_subcommand("encrypt", "XOR a PBM image with pad bits");
    enc->add_option("--image", otp_image, "plaintext PBM (P1 or P4)")->required();
    enc->add_option("--key", otp_key, "key file")->required();
    enc->add_option("--out", otp_out, "ciphertext output")->required();
    enc->add_flag("--allow-raw", otp_allow_raw, "permit keys that are not error corrected");
    auto* dec = otp->add_subcommand("decrypt", "XOR ciphertext back into a PBM image");
    dec->add_option("--cipher", otp_cipher, "ciphertext file")->required();
    dec->add_option("--key", otp_key, "key file")->required();
    dec->add_option("--out", otp_out, "decoded PBM output")->required();
    dec->add_option("--width", otp_w, "image width, px");
    dec->add_option("--height", otp_h, "image height, px");
    dec->add_option("--reference", otp_reference, "original image; prints the pixel error rate");
    dec->add_flag("--allow-raw", otp_allow_raw, "permit keys that are not error corrected");

    // attack-demo
    std::string ad_protocol = "wigner";
    std::string ad_bases = "0,30";
    uint64_t ad_pairs = 400000;
    uint64_t ad_seed = 7;
    double ad_visibility = 1.0;
    auto* demo = app.add_subcommand("attack-demo", "clean vs intercept-resend comparison");
    demo->add_option("--protocol", ad_protocol, "wigner|bb84");
    demo->add_option("--eve-bases", ad_bases, "Eve analyzer bases, deg (csv)");
    demo->add_option("--pairs", ad_pairs, "emitted pairs per run");
    demo->add_option("--seed", ad_seed, "seed");
    demo->add_option("--visibility", ad_visibility, "singlet visibility");

    // stats
    double st_sa = 0.0, st_sb = 0.0, st_c = 0.0, st_w = 4.0;
    auto* stats = app.add_subcommand("stats", "source estimates from measured rates");
    stats->add_option("--singles-a", st_sa, "Alice singles rate, 1/s")->required();
    stats->add_option("--singles-b", st_sb, "Bob singles rate, 1/s")->required();
    stats->add_option("--coincidences", st_c, "coincidence rate, 1/s")->required();
    stats->add_option("--window-ns", st_w, "coincidence window, ns");

    CLI11_PARSE(app, argc, argv);

    try {
        if (run->parsed()) return cmd_run(*run, run_args);
        if (ec->parsed()) return cmd_ec_analyze(ec_p, ec_min, ec_max);
        if (otp->parsed()) {
            if (enc->parsed()) return cmd_otp_encrypt(otp_image, otp_key, otp_out, otp_allow_raw);
            return cmd_otp_decrypt(otp_cipher, otp_key, otp_out, otp_w, otp_h, otp_reference,
                                   otp_allow_raw);
        }
        if (demo->parsed()) {
            return cmd_attack_demo(ad_protocol, ad_bases, ad_pairs, ad_seed, ad_visibility);
        }
        if (stats->parsed()) return cmd_stats(st_sa, st_sb, st_c, st_w);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 1;
}
