#pragma once

#include <cmath>
#include <cstdint>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "stuckat/binning.hpp"
#include "stuckat/bits.hpp"
#include "stuckat/block_codec.hpp"
#include "stuckat/errors.hpp"
#include "stuckat/instances.hpp"
#include "stuckat/small_bias.hpp"
#include "stuckat/strong_codec.hpp"

namespace stuckat {

using json = nlohmann::json;

enum class codec_kind { sidechannel, strong, binning };

inline std::string to_string(codec_kind k) {
    switch (k) {
        case codec_kind::sidechannel: return "sidechannel";
        case codec_kind::strong: return "strong";
        case codec_kind::binning: return "binning";
    }
    return "?";
}

inline codec_kind codec_kind_from_string(const std::string& s) {
    if (s == "sidechannel") return codec_kind::sidechannel;
    if (s == "strong") return codec_kind::strong;
    if (s == "binning") return codec_kind::binning;
    raise(errc::bad_argument, "unknown codec kind: " + s);
}

/// One report = a header, per-trial JSON records and a summary recomputable
/// from the records. Serialization is JSON lines with a leading magic line.
struct experiment_report {
    std::string experiment;
    json params = json::object();
    std::vector<json> records;
    json summary = json::object();

    void write_jsonl(std::ostream& os) const {
        json head{{"format", "stuckat-report"}, {"version", 1}, {"experiment", experiment}, {"params", params}};
        os << head.dump() << "\n";
        for (const auto& rec : records) os << rec.dump() << "\n";
        os << json{{"summary", summary}}.dump() << "\n";
    }

    static experiment_report read_jsonl(std::istream& is) {
        experiment_report rep;
        std::string line;
        bool have_head = false, have_summary = false;
        while (std::getline(is, line)) {
            if (line.empty()) continue;
            json j = json::parse(line);
            if (!have_head) {
                if (j.value("format", "") != "stuckat-report") raise(errc::bad_format, "not a stuckat report");
                rep.experiment = j.value("experiment", "");
                rep.params = j.value("params", json::object());
                have_head = true;
            } else if (j.contains("summary")) {
                rep.summary = j["summary"];
                have_summary = true;
            } else {
                rep.records.push_back(std::move(j));
            }
        }
        if (!have_head || !have_summary) raise(errc::bad_format, "truncated report");
        return rep;
    }

    std::string to_string() const {
        std::ostringstream ss;
        write_jsonl(ss);
        return ss.str();
    }
};

inline double binomial_sigma(double p, std::size_t trials) {
    if (trials == 0) return 0.0;
    return std::sqrt(std::max(p * (1.0 - p), 1e-12) / static_cast<double>(trials));
}

/// Aggregates a round-trip record list; kept separate so tests can verify
/// the embedded summary against a recount.
inline json summarize_roundtrip(const std::vector<json>& records) {
    std::size_t ok = 0, match = 0, consistent = 0;
    std::map<std::string, std::size_t> failures;
    std::uint64_t total_attempts = 0, total_flips = 0;
    for (const auto& r : records) {
        if (r.value("encode_ok", false)) {
            ++ok;
            if (r.value("decode_match", false)) ++match;
            if (r.value("consistent", false)) ++consistent;
            total_attempts += r.value("attempts", 0u);
            total_flips += r.value("flips", 0ull);
        } else {
            failures[r.value("failure", std::string("unknown"))]++;
        }
    }
    const std::size_t n = records.size();
    const double success_rate = n ? static_cast<double>(ok) / n : 0.0;
    json s;
    s["trials"] = n;
    s["encode_successes"] = ok;
    s["decode_matches"] = match;
    s["consistent"] = consistent;
    s["failures"] = failures;
    s["encode_success_rate"] = success_rate;
    s["encode_success_sigma"] = binomial_sigma(success_rate, n);
    s["total_attempts"] = total_attempts;
    s["total_flips"] = total_flips;
    return s;
}

struct roundtrip_options {
    unsigned max_attempts = 16;
    unsigned binning_l = 3;
};

/// Per-trial encode -> decode with consistency checks, failures recorded as
/// data. `strong_prof`/`side_prof` override the defaults built from the spec.
inline experiment_report run_roundtrip(const instance_spec& spec, codec_kind kind,
                                       const roundtrip_options& opt = {},
                                       const strong_profile* strong_prof = nullptr,
                                       const param_profile* side_prof = nullptr) {
    experiment_report rep;
    rep.experiment = "roundtrip";
    rep.params = {{"codec", to_string(kind)},   {"n", spec.n},         {"c", spec.c},
                  {"rho", spec.rho},            {"model", to_string(spec.model)},
                  {"trials", spec.trials},      {"seed", spec.rng_seed},
                  {"msg_len", spec.msg_len ? json(*spec.msg_len) : json("max-rate")}};

    std::optional<param_profile> side_local;
    std::optional<strong_profile> strong_local;
    std::optional<bin_table> table;
    if (kind == codec_kind::sidechannel && !side_prof) {
        side_local = param_profile::standard(spec.n, spec.c);
        side_prof = &*side_local;
    }
    if (kind == codec_kind::strong && !strong_prof) {
        strong_local = strong_profile::desk_default(spec.n, spec.c);
        strong_prof = &*strong_local;
    }
    if (side_prof)
        rep.params["profile"] = {{"b", side_prof->b},
                                 {"blocks", side_prof->block_count},
                                 {"t", side_prof->gen.t},
                                 {"meta_bits", side_prof->meta_bits()},
                                 {"slack", side_prof->slack}};
    if (strong_prof)
        rep.params["profile"] = {{"b", strong_prof->outer.b},
                                 {"v2_len", strong_prof->v2_len},
                                 {"len22", strong_prof->len22},
                                 {"mod2", strong_prof->mod2},
                                 {"mod4", strong_prof->mod4},
                                 {"outer_t", strong_prof->outer.gen.t}};
    double binning_eps = 0.0;
    if (kind == codec_kind::binning) {
        table = bin_table::build(static_cast<unsigned>(spec.n), opt.binning_l, mix64(spec.rng_seed, 0xB17));
        binning_eps = 2.0 / static_cast<double>(opt.binning_l + 1);
        rep.params["l"] = opt.binning_l;
        rep.params["eps"] = binning_eps;
    }

    for (std::size_t t = 0; t < spec.trials; ++t) {
        std::mt19937_64 rng = trial_rng(spec.rng_seed, t);
        memory_image image = generate_image(spec, t, rng);

        std::size_t msg_len = 0;
        if (spec.msg_len) {
            msg_len = *spec.msg_len;
        } else {
            switch (kind) {
                case codec_kind::sidechannel: msg_len = plan_capacity(*side_prof, image.frozen); break;
                case codec_kind::strong: msg_len = strong_capacity(*strong_prof, image.frozen); break;
                case codec_kind::binning:
                    msg_len = static_cast<std::size_t>(table->chunk()) *
                              bin_table::pick_level(table->n(), table->l(), spec.rho, binning_eps);
                    break;
            }
        }
        const bit_vector msg = random_bits(rng, msg_len);

        json rec{{"trial", t}, {"msg_len", msg_len}};
        try {
            bit_vector stored;
            bit_vector decoded;
            unsigned attempts = 1;
            std::uint64_t flips = 0;
            unsigned meta_bits = 0;
            switch (kind) {
                case codec_kind::sidechannel: {
                    seed_source seeds(mix64(spec.rng_seed, mix64(t, 0x5eed)));
                    sidechannel_encoding enc =
                        encode_with_sidechannel(*side_prof, image, msg, seeds, opt.max_attempts);
                    stored = enc.stored;
                    attempts = enc.attempts;
                    meta_bits = static_cast<unsigned>(enc.meta.serialize(*side_prof).size());
                    decoded = decode_with_sidechannel(*side_prof, stored, enc.meta);
                    break;
                }
                case codec_kind::strong: {
                    seed_source seeds(mix64(spec.rng_seed, mix64(t, 0x5eed)));
                    strong_encoding enc = strong_encode(*strong_prof, image, msg, seeds, opt.max_attempts);
                    stored = enc.stored;
                    attempts = enc.stats.outer_attempts;
                    flips = enc.stats.flips_mod2 + enc.stats.flips_mod4;
                    rec["windows_tried"] = enc.stats.windows_tried;
                    decoded = strong_decode(*strong_prof, stored);
                    break;
                }
                case codec_kind::binning: {
                    const unsigned level = static_cast<unsigned>(msg_len / table->chunk());
                    stored = table->encode(image, level, msg);
                    auto [dl, dm] = table->decode(stored);
                    decoded = (dl == level) ? dm : bit_vector();
                    break;
                }
            }
            bool consistent = true;
            for (std::uint32_t i : image.frozen.indices())
                if (stored.get(i) != image.cover.get(i)) consistent = false;
            rec["encode_ok"] = true;
            rec["decode_match"] = (decoded == msg);
            rec["consistent"] = consistent;
            rec["attempts"] = attempts;
            rec["flips"] = flips;
            rec["meta_bits"] = meta_bits;
        } catch (const codec_error& e) {
            rec["encode_ok"] = false;
            rec["failure"] = std::string(errc_name(e.code()));
        }
        rep.records.push_back(std::move(rec));
    }
    rep.summary = summarize_roundtrip(rep.records);
    return rep;
}

enum class matrix_source { uniform, generator };

/// Monte-Carlo check of the full-rank bound: m x n matrices either from
/// uniform bits or from prefix slices of the generator (instantiated at
/// k = m*n so the whole matrix is mu-almost k-wise independent).
inline experiment_report run_rank_bound(std::size_t m, std::size_t n, int mu_log2, std::size_t trials,
                                        std::uint64_t rng_seed, matrix_source source) {
    if (m >= n) raise(errc::bad_argument, "need m < n");
    if (trials < 1000) raise(errc::bad_argument, "bound-comparison experiments need at least 1000 trials");
    experiment_report rep;
    rep.experiment = "rank-bound";
    const bool gen = source == matrix_source::generator;
    rep.params = {{"m", m},      {"n", n},           {"mu_log2", mu_log2},
                  {"trials", trials}, {"seed", rng_seed}, {"source", gen ? "generator" : "uniform"}};

    std::optional<generator_params> params;
    std::optional<dual_distance_code> code;
    if (gen) {
        params = derive_params(m * n, static_cast<unsigned>(m * n), mu_log2);
        code.emplace(params->r, params->k);
        rep.params["t"] = params->t;
        rep.params["k"] = params->k;
    }

    std::mt19937_64 rng(rng_seed);
    std::size_t deficient = 0;
    for (std::size_t tr = 0; tr < trials; ++tr) {
        bit_vector bits;
        if (gen) {
            bit_vector seed = random_bits(rng, params->t);
            bits = expand_seed_prefix(*params, *code, seed, m * n);
        } else {
            bits = random_bits(rng, m * n);
        }
        const gf2_matrix a = gf2_matrix::from_bits(m, n, bits);
        const bool bad = rank(a) < m;
        deficient += bad;
        rep.records.push_back(json{{"trial", tr}, {"deficient", bad}});
    }

    const double rate = trials ? static_cast<double>(deficient) / trials : 0.0;
    const double base_bound = std::pow(2.0, -static_cast<double>(n - m));
    const double bias_term = gen ? std::pow(2.0, mu_log2 + static_cast<double>(m)) : 0.0;
    const double bound = base_bound + bias_term;
    const double sigma = binomial_sigma(bound, trials);
    rep.summary = {{"trials", trials},
                   {"deficient", deficient},
                   {"rate", rate},
                   {"bound", bound},
                   {"sigma", sigma},
                   {"threshold", bound + 3 * sigma},
                   {"pass", rate <= bound + 3 * sigma}};
    return rep;
}

namespace detail {

/// Exact numerator of the deviation |Pr - 2^-k'| maximized over patterns for
/// one index set: since every parity of generator outputs has nonnegative
/// correlation sum, the all-zeros pattern dominates and the deviation equals
/// 2^-k' * sum over nonempty subsets S of |1 - 2 Pr[parity_S = 1]|.
struct bias_accumulator {
    std::uint64_t seeds = 0;

    std::uint64_t parity_dev_num(std::uint64_t ones) const {
        const std::uint64_t twice = 2 * ones;
        return twice >= seeds ? twice - seeds : seeds - twice;
    }
};

}  // namespace detail

/// Exhaustive bias audit over all 2^t seeds (t <= 22); larger t falls back
/// to sampled index sets over sampled seeds and says so in the report.
/// Exhaustive deviations are compared with integer arithmetic, so the
/// pass/fail verdicts carry no floating-point tolerance.
inline experiment_report run_bias_audit(std::size_t r, unsigned k, int mu_log2, std::uint64_t rng_seed = 1,
                                        std::size_t sample_seeds = 1u << 18, std::size_t sample_sets = 2048) {
    if (k > 4) raise(errc::bad_argument, "bias audit supports k <= 4");
    experiment_report rep;
    rep.experiment = "bias-audit";
    const generator_params params = derive_params(r, k, mu_log2);
    dual_distance_code code(params.r, params.k);
    const bool exhaustive = params.t <= 22;
    rep.params = {{"r", r},         {"k", k},       {"mu_log2", mu_log2},
                  {"t", params.t},  {"h", params.h}, {"mode", exhaustive ? "exhaustive" : "sampled"}};

    // Column bitsets over the seed space.
    const std::uint64_t nseeds = exhaustive ? (1ull << params.t) : sample_seeds;
    const std::size_t words = static_cast<std::size_t>((nseeds + 63) / 64);
    std::vector<std::vector<std::uint64_t>> cols(r, std::vector<std::uint64_t>(words, 0));
    std::mt19937_64 rng(rng_seed);
    for (std::uint64_t sv = 0; sv < nseeds; ++sv) {
        bit_vector seed(params.t);
        if (exhaustive) {
            for (unsigned i = 0; i < params.t; ++i) seed.set(params.t - 1 - i, (sv >> i) & 1u);
        } else {
            seed = random_bits(rng, params.t);
        }
        seed_expander ex(params, code, seed);
        const bit_vector& out = ex.prefix(r);
        for (std::size_t j = 0; j < r; ++j)
            if (out.get(j)) cols[j][sv >> 6] |= 1ull << (sv & 63u);
    }

    auto count_ones = [&](const std::vector<std::uint64_t>& v) {
        std::uint64_t c = 0;
        for (std::uint64_t w : v) c += static_cast<std::uint64_t>(std::popcount(w));
        return c;
    };
    auto xor_into = [&](std::vector<std::uint64_t>& dst, const std::vector<std::uint64_t>& src) {
        for (std::size_t i = 0; i < words; ++i) dst[i] ^= src[i];
    };
    detail::bias_accumulator acc{nseeds};

    // Index sets: all of them when r is small enough, otherwise sampled.
    std::vector<std::vector<std::uint32_t>> sets;
    const bool all_sets = exhaustive;
    if (!all_sets) {
        for (std::size_t i = 0; i < sample_sets; ++i) {
            std::vector<std::uint32_t> s;
            while (s.size() < k) {
                const std::uint32_t c = static_cast<std::uint32_t>(rng() % r);
                if (std::find(s.begin(), s.end(), c) == s.end()) s.push_back(c);
            }
            std::sort(s.begin(), s.end());
            sets.push_back(std::move(s));
        }
    }

    // dev_num(T) = sum over nonempty S subset T of |seeds - 2*ones(S)|;
    // dev(T) = dev_num / (2^|T| * seeds). Per-k' threshold 2^(k-k') mu.
    std::vector<std::uint64_t> e1(r, 0);
    for (std::size_t i = 0; i < r; ++i) e1[i] = acc.parity_dev_num(count_ones(cols[i]));

    std::vector<std::uint64_t> max_dev_num(k + 1, 0);
    auto note = [&](unsigned kp, std::uint64_t dev_num) {
        if (dev_num > max_dev_num[kp]) max_dev_num[kp] = dev_num;
    };

    for (std::size_t i = 0; i < r; ++i) note(1, e1[i]);

    std::vector<std::vector<std::uint64_t>> e2;
    if (k >= 2) {
        e2.assign(r, std::vector<std::uint64_t>(r, 0));
        std::vector<std::uint64_t> buf(words);
        for (std::size_t i = 0; i < r; ++i)
            for (std::size_t jx = i + 1; jx < r; ++jx) {
                buf = cols[i];
                xor_into(buf, cols[jx]);
                e2[i][jx] = acc.parity_dev_num(count_ones(buf));
                note(2, e1[i] + e1[jx] + e2[i][jx]);
            }
    }
    if (k >= 3) {
        std::vector<std::uint64_t> bij(words), bijl(words);
        auto visit3 = [&](std::size_t i, std::size_t jx, std::size_t l) {
            bijl = bij;
            xor_into(bijl, cols[l]);
            const std::uint64_t e3 = acc.parity_dev_num(count_ones(bijl));
            note(3, e1[i] + e1[jx] + e1[l] + e2[i][jx] + e2[i][l] + e2[jx][l] + e3);
            if (k >= 4) {
                std::vector<std::uint64_t> b4(words);
                for (std::size_t m4 = l + 1; m4 < r; ++m4) {
                    b4 = bijl;
                    xor_into(b4, cols[m4]);
                    // only the size-4 term is new; the size-<=3 terms repeat
                    std::uint64_t dev = acc.parity_dev_num(count_ones(b4));
                    dev += e1[i] + e1[jx] + e1[l] + e1[m4];
                    dev += e2[i][jx] + e2[i][l] + e2[i][m4] + e2[jx][l] + e2[jx][m4] + e2[l][m4];
                    std::vector<std::uint64_t> t3(words);
                    for (auto [a, b, cc] : {std::array<std::size_t, 3>{i, jx, l}, {i, jx, m4}, {i, l, m4}, {jx, l, m4}}) {
                        t3 = cols[a];
                        xor_into(t3, cols[b]);
                        xor_into(t3, cols[cc]);
                        dev += acc.parity_dev_num(count_ones(t3));
                    }
                    note(4, dev);
                }
            }
        };
        if (all_sets) {
            for (std::size_t i = 0; i < r; ++i)
                for (std::size_t jx = i + 1; jx < r; ++jx) {
                    bij = cols[i];
                    xor_into(bij, cols[jx]);
                    for (std::size_t l = jx + 1; l < r; ++l) visit3(i, jx, l);
                }
        } else {
            for (const auto& s : sets) {
                bij = cols[s[0]];
                xor_into(bij, cols[s[1]]);
                visit3(s[0], s[1], s[2]);
            }
        }
    }

    bool all_pass = true;
    double max_normalized = 0.0;
    for (unsigned kp = 1; kp <= k; ++kp) {
        const double dev = static_cast<double>(max_dev_num[kp]) /
                           (std::pow(2.0, static_cast<double>(kp)) * static_cast<double>(nseeds));
        const double thr = std::pow(2.0, static_cast<double>(k) - kp + mu_log2);
        // integer form: dev_num <= 2^(t + k - e) for exhaustive runs
        bool pass;
        if (exhaustive) {
            const unsigned e = static_cast<unsigned>(-mu_log2);
            const long exp2 = static_cast<long>(params.t) + static_cast<long>(k) - static_cast<long>(e);
            pass = exp2 >= 0 && exp2 < 63 ? max_dev_num[kp] <= (1ull << exp2) : dev <= thr;
        } else {
            pass = dev <= thr;
        }
        all_pass = all_pass && pass;
        max_normalized = std::max(max_normalized, dev / std::pow(2.0, static_cast<double>(k) - kp));
        rep.records.push_back(json{{"k_prime", kp}, {"max_deviation", dev}, {"threshold", thr}, {"pass", pass}});
    }
    rep.summary = {{"mode", exhaustive ? "exhaustive" : "sampled"},
                   {"seeds", nseeds},
                   {"max_normalized_deviation", max_normalized},
                   {"mu", std::pow(2.0, mu_log2)},
                   {"pass", all_pass}};
    return rep;
}

/// Evenly spread frozen set with exactly floor(rho*n) cells.
inline frozen_set spread_frozen(std::size_t n, double rho) {
    const std::size_t count = static_cast<std::size_t>(rho * static_cast<double>(n));
    std::vector<std::uint32_t> idx;
    idx.reserve(count);
    for (std::size_t j = 0; j < count; ++j)
        idx.push_back(static_cast<std::uint32_t>((j * n) / count));
    return frozen_set::from_indices(std::move(idx), n);
}

struct rate_point {
    double rho;
    std::size_t formula_len;   // floor((1 - rho - eps) * N), clamped at 0
    std::size_t capacity;
    bool formula_accepted;
    bool beyond_rejected;
};

/// Accept/reject sweep on the rate bounds with evenly spread defects.
inline std::vector<rate_point> rate_sweep(codec_kind kind, std::size_t n, unsigned c,
                                          const std::vector<double>& rhos,
                                          const strong_profile* strong_prof = nullptr) {
    std::optional<param_profile> side;
    std::optional<strong_profile> strong_local;
    if (kind == codec_kind::sidechannel) side = param_profile::standard(n, c);
    if (kind == codec_kind::strong && !strong_prof) {
        strong_local = strong_profile::desk_default(n, c);
        strong_prof = &*strong_local;
    }
    std::vector<rate_point> out;
    for (double rho : rhos) {
        const double eps = (kind == codec_kind::strong ? 5.0 : 3.0) / static_cast<double>(c);
        const double raw = (1.0 - rho - eps) * static_cast<double>(n);
        rate_point pt;
        pt.rho = rho;
        pt.formula_len = raw > 0 ? static_cast<std::size_t>(raw) : 0;
        const frozen_set frozen = spread_frozen(n, rho);
        if (kind == codec_kind::sidechannel) {
            pt.capacity = plan_capacity(*side, frozen);
            auto accepts = [&](std::size_t len) {
                try {
                    plan_blocks(*side, frozen, len);
                    return true;
                } catch (const codec_error&) {
                    return false;
                }
            };
            pt.formula_accepted = accepts(pt.formula_len);
            pt.beyond_rejected = !accepts(pt.capacity + 1);
        } else {
            pt.capacity = strong_capacity(*strong_prof, frozen);
            const memory_image image{bit_vector(n), frozen};
            auto accepts = [&](std::size_t len) {
                // a rank failure is not a rate rejection, only MessageTooLong is
                seed_source seeds(7);
                try {
                    strong_encode(*strong_prof, image, bit_vector(len), seeds, 2);
                    return true;
                } catch (const codec_error& e) {
                    return e.code() != errc::message_too_long;
                }
            };
            pt.formula_accepted = accepts(pt.formula_len);
            pt.beyond_rejected = !accepts(pt.capacity + 1);
        }
        out.push_back(pt);
    }
    return out;
}

inline void write_rate_csv(const std::vector<rate_point>& pts, std::ostream& os) {
    os << "rho,formula_len,capacity,formula_accepted,beyond_rejected\n";
    for (const auto& p : pts)
        os << p.rho << "," << p.formula_len << "," << p.capacity << "," << (p.formula_accepted ? 1 : 0) << ","
           << (p.beyond_rejected ? 1 : 0) << "\n";
}

}  // namespace stuckat
