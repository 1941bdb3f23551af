// Experiment and codec front end: encode/decode files, run round-trip and
// bound-verification experiments, emit JSONL reports and CSV tables.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "stuckat/experiments.hpp"
#include "stuckat/formats.hpp"

namespace fs = std::filesystem;
using namespace stuckat;

namespace {

std::string report_path(const std::string& requested, const std::string& fallback_name) {
    if (!requested.empty()) return requested;
    const char* dir = std::getenv("STUCKAT_REPORT_DIR");
    if (!dir) return "";
    fs::create_directories(dir);
    return (fs::path(dir) / fallback_name).string();
}

void emit_report(const experiment_report& rep, const std::string& path) {
    if (path.empty()) return;
    std::ofstream os(path);
    if (!os) raise(errc::bad_format, "cannot open report file: " + path);
    rep.write_jsonl(os);
    std::cerr << "report written to " << path << "\n";
}

bit_vector read_message_file(const std::string& path) {
    std::ifstream is(path);
    if (!is) raise(errc::bad_format, "cannot open message file: " + path);
    std::string line;
    std::getline(is, line);
    if (!line.empty() && line.back() == '\r') line.pop_back();
    return bit_vector::from_string(line);
}

template <typename T>
T load_file(const std::string& path, T (*reader)(std::istream&)) {
    std::ifstream is(path);
    if (!is) raise(errc::bad_format, "cannot open file: " + path);
    return reader(is);
}

struct profile_args {
    std::string path;
    std::size_t n = 4096;
    unsigned c = 4;

    void attach(CLI::App* cmd) {
        cmd->add_option("--profile", path, "profile file (overrides --n/--c defaults)");
        cmd->add_option("--n", n, "memory length in bits");
        cmd->add_option("--c", c, "universal constant C");
    }

    param_profile sidechannel() const {
        if (!path.empty()) {
            auto any = load_file<io::any_profile>(path, io::read_profile);
            if (!any.sidechannel) raise(errc::bad_format, "profile file is not a sidechannel profile");
            return *any.sidechannel;
        }
        return param_profile::standard(n, c);
    }

    strong_profile strong() const {
        if (!path.empty()) {
            auto any = load_file<io::any_profile>(path, io::read_profile);
            if (!any.strong) raise(errc::bad_format, "profile file is not a strong profile");
            return *any.strong;
        }
        return strong_profile::desk_default(n, c);
    }
};

int cmd_encode(const profile_args& prof, const std::string& codec, const std::string& image_path,
               const std::string& msg_path, const std::string& out_path, const std::string& meta_path,
               std::uint64_t seed, const std::string& save_profile) {
    const memory_image image = load_file<memory_image>(image_path, io::read_image);
    const bit_vector msg = read_message_file(msg_path);
    seed_source seeds(seed);

    if (codec == "sidechannel") {
        const param_profile p = prof.sidechannel();
        if (!save_profile.empty()) {
            std::ofstream os(save_profile);
            io::write_profile(p, os);
        }
        const sidechannel_encoding enc = encode_with_sidechannel(p, image, msg, seeds);
        std::ofstream os(out_path);
        io::write_stored(enc.stored, os);
        if (meta_path.empty()) raise(errc::bad_argument, "sidechannel encode needs --meta output path");
        std::ofstream ms(meta_path);
        io::write_metadata(enc.meta.serialize(p), ms);
        std::cerr << "encoded " << msg.size() << " bits in " << enc.attempts << " attempt(s); metadata "
                  << p.meta_bits() << " bits\n";
    } else if (codec == "strong") {
        const strong_profile sp = prof.strong();
        if (!save_profile.empty()) {
            std::ofstream os(save_profile);
            io::write_profile(sp, os);
        }
        const strong_encoding enc = strong_encode(sp, image, msg, seeds);
        std::ofstream os(out_path);
        io::write_stored(enc.stored, os);
        std::cerr << "encoded " << msg.size() << " bits; interval " << enc.stats.part.interval << ", window "
                  << enc.stats.nest.window << ", " << enc.stats.flips_mod2 + enc.stats.flips_mod4 << " flips\n";
    } else {
        raise(errc::bad_argument, "encode supports codecs: sidechannel, strong");
    }
    return 0;
}

int cmd_decode(const profile_args& prof, const std::string& codec, const std::string& stored_path,
               const std::string& meta_path) {
    const bit_vector stored = load_file<bit_vector>(stored_path, io::read_stored);
    bit_vector msg;
    if (codec == "sidechannel") {
        const param_profile p = prof.sidechannel();
        if (meta_path.empty()) raise(errc::bad_argument, "sidechannel decode needs --meta");
        const bit_vector meta_bits = load_file<bit_vector>(meta_path, io::read_metadata);
        msg = decode_with_sidechannel(p, stored, side_metadata::parse(p, meta_bits));
    } else if (codec == "strong") {
        msg = strong_decode(prof.strong(), stored);
    } else {
        raise(errc::bad_argument, "decode supports codecs: sidechannel, strong");
    }
    std::cout << msg.to_string() << "\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"strong stuck-at codes: codecs and bound-verification experiments"};
    app.require_subcommand(1);

    // encode
    auto* enc_cmd = app.add_subcommand("encode", "encode a message into a memory image");
    profile_args enc_prof;
    enc_prof.attach(enc_cmd);
    std::string enc_codec = "sidechannel", enc_image, enc_msg, enc_out, enc_meta, enc_save_profile;
    std::uint64_t enc_seed = 1;
    enc_cmd->add_option("--codec", enc_codec, "sidechannel|strong");
    enc_cmd->add_option("--image", enc_image, "memory image file")->required();
    enc_cmd->add_option("--message-file", enc_msg, "message bits file (one line of 0/1)")->required();
    enc_cmd->add_option("--out", enc_out, "stored-vector output file")->required();
    enc_cmd->add_option("--meta", enc_meta, "metadata output file (sidechannel)");
    enc_cmd->add_option("--seed", enc_seed, "encoder seed-source seed");
    enc_cmd->add_option("--save-profile", enc_save_profile, "write the profile actually used");

    // decode
    auto* dec_cmd = app.add_subcommand("decode", "decode a stored vector (message on stdout)");
    profile_args dec_prof;
    dec_prof.attach(dec_cmd);
    std::string dec_codec = "sidechannel", dec_stored, dec_meta;
    dec_cmd->add_option("--codec", dec_codec, "sidechannel|strong");
    dec_cmd->add_option("--stored", dec_stored, "stored-vector file")->required();
    dec_cmd->add_option("--meta", dec_meta, "metadata file (sidechannel)");

    // roundtrip
    auto* rt_cmd = app.add_subcommand("roundtrip", "encode->decode trials with a fresh instance per trial");
    profile_args rt_prof;
    rt_prof.attach(rt_cmd);
    std::string rt_codec = "sidechannel", rt_model = "uniform-random", rt_msg_len = "max-rate", rt_report;
    double rt_rho = 0.3;
    std::size_t rt_trials = 100;
    std::uint64_t rt_seed = 1;
    unsigned rt_l = 3;
    rt_cmd->add_option("--codec", rt_codec, "sidechannel|strong|binning");
    rt_cmd->add_option("--rho", rt_rho, "defect fraction");
    rt_cmd->add_option("--defects", rt_model, "uniform-random|clustered|adversarial-prefix");
    rt_cmd->add_option("--msg-len", rt_msg_len, "message length or 'max-rate'");
    rt_cmd->add_option("--trials", rt_trials, "trial count");
    rt_cmd->add_option("--seed", rt_seed, "experiment seed");
    rt_cmd->add_option("--l", rt_l, "level count (binning)");
    rt_cmd->add_option("--report", rt_report, "report file (JSONL)");

    // rank-bound
    auto* rb_cmd = app.add_subcommand("rank-bound", "Monte-Carlo full-rank bound check");
    std::size_t rb_m = 8, rb_n = 16, rb_trials = 100000;
    int rb_mu = -20;
    std::uint64_t rb_seed = 1;
    std::string rb_source = "both", rb_report;
    rb_cmd->add_option("--rows", rb_m, "matrix rows m");
    rb_cmd->add_option("--cols", rb_n, "matrix cols n");
    rb_cmd->add_option("--mu-log2", rb_mu, "log2 of the generator bias");
    rb_cmd->add_option("--trials", rb_trials, "trial count");
    rb_cmd->add_option("--seed", rb_seed, "experiment seed");
    rb_cmd->add_option("--source", rb_source, "uniform|generator|both");
    rb_cmd->add_option("--report", rb_report, "report file prefix (JSONL)");

    // bias-audit
    auto* ba_cmd = app.add_subcommand("bias-audit", "k-wise independence deviation audit");
    std::size_t ba_r = 16;
    unsigned ba_k = 2;
    int ba_mu = -4;
    std::string ba_report;
    ba_cmd->add_option("--r", ba_r, "output length");
    ba_cmd->add_option("--k", ba_k, "independence order");
    ba_cmd->add_option("--mu-log2", ba_mu, "log2 of the bias bound");
    ba_cmd->add_option("--report", ba_report, "report file (JSONL)");

    // binning-demo
    auto* bd_cmd = app.add_subcommand("binning-demo", "existential construction at toy scale");
    unsigned bd_n = 8, bd_l = 3;
    double bd_rho = 0.25;
    std::size_t bd_trials = 0;  // 0 = exhaustive
    std::uint64_t bd_seed = 1;
    std::string bd_report;
    bd_cmd->add_option("--n", bd_n, "vector length (<= 20)");
    bd_cmd->add_option("--l", bd_l, "level count L");
    bd_cmd->add_option("--rho", bd_rho, "defect fraction");
    bd_cmd->add_option("--trials", bd_trials, "sampled trials (0 = exhaustive over covers and frozen sets)");
    bd_cmd->add_option("--seed", bd_seed, "table seed");
    bd_cmd->add_option("--report", bd_report, "report file (JSONL)");

    // rate-sweep
    auto* rs_cmd = app.add_subcommand("rate-sweep", "accept/reject sweep over the rate bounds");
    profile_args rs_prof;
    rs_prof.attach(rs_cmd);
    std::string rs_codec = "sidechannel", rs_csv;
    std::vector<double> rs_rhos{0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7};
    rs_cmd->add_option("--codec", rs_codec, "sidechannel|strong");
    rs_cmd->add_option("--rho-grid", rs_rhos, "defect fractions");
    rs_cmd->add_option("--csv", rs_csv, "CSV output file")->required();

    CLI11_PARSE(app, argc, argv);

    try {
        if (enc_cmd->parsed())
            return cmd_encode(enc_prof, enc_codec, enc_image, enc_msg, enc_out, enc_meta, enc_seed, enc_save_profile);
        if (dec_cmd->parsed()) return cmd_decode(dec_prof, dec_codec, dec_stored, dec_meta);

        if (rt_cmd->parsed()) {
            instance_spec spec;
            spec.n = rt_prof.n;
            spec.c = rt_prof.c;
            spec.rho = rt_rho;
            spec.model = defect_model_from_string(rt_model);
            if (rt_msg_len != "max-rate") spec.msg_len = std::stoull(rt_msg_len);
            spec.trials = rt_trials;
            spec.rng_seed = rt_seed;
            roundtrip_options opt;
            opt.binning_l = rt_l;
            std::optional<param_profile> sp_side;
            std::optional<strong_profile> sp_strong;
            const codec_kind kind = codec_kind_from_string(rt_codec);
            if (kind == codec_kind::sidechannel) sp_side = rt_prof.sidechannel();
            if (kind == codec_kind::strong) sp_strong = rt_prof.strong();
            const experiment_report rep = run_roundtrip(spec, kind, opt, sp_strong ? &*sp_strong : nullptr,
                                                        sp_side ? &*sp_side : nullptr);
            emit_report(rep, report_path(rt_report, "roundtrip.jsonl"));
            std::cout << rep.summary.dump(2) << "\n";
            const auto& s = rep.summary;
            const bool all_match = s["decode_matches"] == s["encode_successes"];
            const bool all_consistent = s["consistent"] == s["encode_successes"];
            return (all_match && all_consistent) ? 0 : 3;
        }

        if (rb_cmd->parsed()) {
            bool pass = true;
            for (const std::string src : {"uniform", "generator"}) {
                if (rb_source != "both" && rb_source != src) continue;
                const experiment_report rep =
                    run_rank_bound(rb_m, rb_n, rb_mu, rb_trials, rb_seed,
                                   src == "uniform" ? matrix_source::uniform : matrix_source::generator);
                emit_report(rep, report_path(rb_report.empty() ? "" : rb_report + "." + src + ".jsonl",
                                             "rank-bound-" + src + ".jsonl"));
                std::cout << src << ": " << rep.summary.dump(2) << "\n";
                pass = pass && rep.summary["pass"].get<bool>();
            }
            return pass ? 0 : 3;
        }

        if (ba_cmd->parsed()) {
            const experiment_report rep = run_bias_audit(ba_r, ba_k, ba_mu);
            emit_report(rep, report_path(ba_report, "bias-audit.jsonl"));
            std::cout << rep.summary.dump(2) << "\n";
            return rep.summary["pass"].get<bool>() ? 0 : 3;
        }

        if (bd_cmd->parsed()) {
            instance_spec spec;
            spec.n = bd_n;
            spec.c = bd_l;
            spec.rho = bd_rho;
            spec.model = defect_model::uniform;
            spec.trials = bd_trials == 0 ? 2000 : bd_trials;
            spec.rng_seed = bd_seed;
            roundtrip_options opt;
            opt.binning_l = bd_l;
            const experiment_report rep = run_roundtrip(spec, codec_kind::binning, opt);
            emit_report(rep, report_path(bd_report, "binning-demo.jsonl"));
            std::cout << rep.summary.dump(2) << "\n";
            return 0;  // NotEncodable rate is reported, not thresholded
        }

        if (rs_cmd->parsed()) {
            const codec_kind kind = codec_kind_from_string(rs_codec);
            std::optional<strong_profile> sp;
            if (kind == codec_kind::strong) sp = rs_prof.strong();
            const auto pts = rate_sweep(kind, rs_prof.n, rs_prof.c, rs_rhos, sp ? &*sp : nullptr);
            std::ofstream os(rs_csv);
            if (!os) raise(errc::bad_format, "cannot open CSV file: " + rs_csv);
            write_rate_csv(pts, os);
            bool ok = true;
            for (const auto& p : pts) ok = ok && p.formula_accepted && p.beyond_rejected;
            std::cout << "rate sweep over " << pts.size() << " points: " << (ok ? "all bounds hold" : "VIOLATION")
                      << "; table in " << rs_csv << "\n";
            return ok ? 0 : 3;
        }
    } catch (const codec_error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return 1;
}
