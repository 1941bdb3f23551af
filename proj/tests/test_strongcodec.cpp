#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <random>
#include <vector>

#include "stuckat/instances.hpp"
#include "stuckat/strong_codec.hpp"

using namespace stuckat;

namespace {

const strong_profile& desk14() {
    static const strong_profile sp = strong_profile::desk_default(1 << 14, 4);
    return sp;
}

memory_image random_image(std::mt19937_64& rng, std::size_t n, double rho) {
    frozen_set f = random_frozen(rng, n, static_cast<std::size_t>(rho * n), defect_model::uniform);
    return {random_bits(rng, n), std::move(f)};
}

bool partition_conditions_hold(const strong_profile& sp, const partition& part, const frozen_set& frozen) {
    // condition 1: v2 strictly left of v4
    if (part.v2_end > part.tail_begin) return false;
    // condition 2: frozen count within (rho + 2*delta) * |v2|
    const bit_vector mask = frozen.to_mask(sp.n);
    const std::uint64_t cnt = mask.weight_range(part.v2_begin, sp.v2_len);
    return cnt * sp.n <= (frozen.size() + 2 * sp.v2_len) * sp.v2_len;
}

}  // namespace

TEST_CASE("desk profile constants") {
    const auto& sp = desk14();
    CHECK(sp.v2_len % sp.outer.b == 0);
    CHECK(sp.mod2 == (1ull << sp.inner.meta_bits()));
    CHECK(sp.mod4 >= sp.interval_count() * sp.windows_per_v2());
    CHECK(sp.inner.seed_bits_in_meta() == 0);  // nested seed is pinned in the profile
    CHECK(sp.tail_unfrozen == (sp.n + floor_log2(sp.n) - 1) / floor_log2(sp.n));
    CHECK(sp.outer.meta_bits() <= sp.meta_const * sp.c * ceil_log2(sp.n));
}

TEST_CASE("paper-scale nested sizing does not fit desk N") {
    // len22 = N^(1/2KC) is about 2 at N = 2^14; such a nested block cannot
    // carry any metadata and profile construction rejects it
    CHECK_THROWS_AS(strong_profile::make(1 << 14, 4, 4, 2, -24, std::nullopt, std::nullopt, 0.35), codec_error);
}

TEST_CASE("find_partition on a defect-free memory") {
    const auto& sp = desk14();
    const auto part = find_partition(sp, frozen_set());
    CHECK(part.interval == 1);  // smallest valid interval
    CHECK(part.v2_begin == sp.v2_len);
    CHECK(part.tail_begin == sp.n - sp.tail_unfrozen);  // maximal j
}

TEST_CASE("find_partition skips a packed interval") {
    const auto& sp = desk14();
    // pack interval 1 completely with frozen cells
    std::vector<std::uint32_t> idx;
    for (std::size_t pos = sp.v2_len; pos < 2 * sp.v2_len; ++pos) idx.push_back(static_cast<std::uint32_t>(pos));
    const frozen_set frozen = frozen_set::from_indices(std::move(idx), sp.n);
    const auto part = find_partition(sp, frozen);
    CHECK(part.interval == 2);
    CHECK(partition_conditions_hold(sp, part, frozen));
}

TEST_CASE("partition sweep at N=512 delta=1/4") {
    // delta*N = 128 exactly, using a 16-bit block width
    const auto sp = strong_profile::partition_study(512, 4, 4, 16, 64, 0.45);
    REQUIRE(sp.v2_len == 128);
    std::mt19937_64 rng(2024);
    int found = 0;
    for (int trial = 0; trial < 300; ++trial) {
        const frozen_set frozen = random_frozen(rng, 512, 204, defect_model::uniform);  // rho = 0.4
        const auto part = find_partition(sp, frozen);
        REQUIRE(partition_conditions_hold(sp, part, frozen));
        ++found;
    }
    CHECK(found == 300);
}

TEST_CASE("find_subblock picks the first admissible window") {
    const auto& sp = desk14();
    const auto part = find_partition(sp, frozen_set());
    const auto nl = find_subblock(sp, part, frozen_set());
    CHECK(nl.window == 0);
    CHECK(nl.v22_begin == part.v2_begin);

    // pack the first window: the second is chosen
    std::vector<std::uint32_t> idx;
    for (std::size_t pos = part.v2_begin; pos < part.v2_begin + sp.len22; ++pos)
        idx.push_back(static_cast<std::uint32_t>(pos));
    const frozen_set frozen = frozen_set::from_indices(std::move(idx), sp.n);
    const auto part2 = find_partition(sp, frozen);
    if (part2.interval == part.interval) {
        const auto nl2 = find_subblock(sp, part2, frozen);
        CHECK(nl2.window == 1);
    }
}

TEST_CASE("subblock sweep: window condition always holds") {
    const auto sp = strong_profile::partition_study(512, 4, 4, 16, 64, 0.45);
    std::mt19937_64 rng(31337);
    for (int trial = 0; trial < 200; ++trial) {
        const frozen_set frozen = random_frozen(rng, 512, 154, defect_model::uniform);  // rho = 0.3
        const auto part = find_partition(sp, frozen);
        const auto nl = find_subblock(sp, part, frozen);
        const bit_vector mask = frozen.to_mask(sp.n);
        const std::uint64_t cnt = mask.weight_range(nl.v22_begin, sp.len22);
        REQUIRE(cnt * sp.n <= (frozen.size() + 2 * sp.v2_len) * sp.len22);
    }
}

TEST_CASE("position code pack/unpack bijection") {
    const auto& sp = desk14();
    std::uint64_t expect = 0;
    for (std::uint32_t i = 1; i <= sp.interval_count(); ++i)
        for (std::uint32_t w = 0; w < sp.windows_per_v2(); ++w) {
            const std::uint64_t d = pack_position_code(sp, i, w);
            CHECK(d == expect++);
            CHECK(d < sp.mod4);
            const auto [i2, w2] = unpack_position_code(sp, d);
            CHECK(i2 == i);
            CHECK(w2 == w);
        }
    CHECK(pack_position_code(sp, 1, 0) == 0);
    CHECK_THROWS_AS(pack_position_code(sp, 0, 0), codec_error);
    CHECK_THROWS_AS(unpack_position_code(sp, sp.interval_count() * sp.windows_per_v2()), codec_error);
}

TEST_CASE("strong round trip with weight-residue checks") {
    const auto& sp = desk14();
    std::mt19937_64 rng(5);
    int done = 0;
    for (int trial = 0; trial < 12; ++trial) {
        const double rho = 0.1 + 0.1 * (trial % 3);
        const memory_image image = random_image(rng, sp.n, rho);
        const bit_vector msg = random_bits(rng, strong_capacity(sp, image.frozen));
        seed_source seeds(trial + 1);
        strong_encoding enc;
        try {
            enc = strong_encode(sp, image, msg, seeds);
        } catch (const codec_error& e) {
            REQUIRE(e.code() == errc::rank_deficient);
            continue;
        }
        ++done;

        // consistency: every frozen cell keeps its cover value
        for (std::uint32_t i : image.frozen.indices()) REQUIRE(enc.stored.get(i) == image.cover.get(i));

        // weight-residue layering on the final vector
        const auto& st = enc.stats;
        REQUIRE(enc.stored.weight() % sp.mod4 == st.d_residue % sp.mod4);
        REQUIRE(enc.stored.weight_range(st.part.v2_begin, sp.v2_len) % sp.mod2 == st.u_residue % sp.mod2);

        // flip budgets of the two modular encodings
        REQUIRE(st.flips_mod2 <= sp.mod2);
        REQUIRE(st.flips_mod4 <= sp.mod4);

        // the decoder sees only the stored vector
        REQUIRE(strong_decode(sp, enc.stored) == msg);
    }
    CHECK(done >= 10);
}

TEST_CASE("same message under different frozen sets decodes identically") {
    const auto& sp = desk14();
    std::mt19937_64 rng(9);
    const bit_vector msg = random_bits(rng, 400);
    bit_vector first_decode;
    for (int v = 0; v < 3; ++v) {
        const memory_image image = random_image(rng, sp.n, 0.1 + 0.1 * v);
        seed_source seeds(42 + v);
        const auto enc = strong_encode(sp, image, msg, seeds);
        const bit_vector dec = strong_decode(sp, enc.stored);
        CHECK(dec == msg);
        if (v == 0) first_decode = dec;
        CHECK(dec == first_decode);
    }
}

TEST_CASE("strong encode rejects over-capacity messages") {
    const auto& sp = desk14();
    std::mt19937_64 rng(13);
    const memory_image image = random_image(rng, sp.n, 0.2);
    const std::size_t cap = strong_capacity(sp, image.frozen);
    seed_source seeds(3);
    try {
        strong_encode(sp, image, random_bits(rng, cap + 1), seeds);
        FAIL("expected MessageTooLong");
    } catch (const codec_error& e) {
        CHECK(e.code() == errc::message_too_long);
    }
}

TEST_CASE("corrupted weight yields InvalidPositionCode or garbage, never rho input") {
    const auto& sp = desk14();
    std::mt19937_64 rng(21);
    const memory_image image = random_image(rng, sp.n, 0.1);
    const bit_vector msg = random_bits(rng, 200);
    seed_source seeds(8);
    const auto enc = strong_encode(sp, image, msg, seeds);

    // push the total weight into the unused residue range of mod4
    const std::uint64_t valid = sp.interval_count() * sp.windows_per_v2();
    REQUIRE(valid < sp.mod4);  // desk profile leaves headroom
    bit_vector corrupted = enc.stored;
    const std::uint64_t cur = corrupted.weight() % sp.mod4;
    std::uint64_t add = (valid - cur + sp.mod4) % sp.mod4;
    if (add == 0) add = sp.mod4;
    std::size_t pos = 0;
    for (std::uint64_t flipped = 0; flipped < add && pos < sp.n; ++pos) {
        if (!corrupted.get(pos)) {
            corrupted.set(pos, true);
            ++flipped;
        }
    }
    try {
        (void)strong_decode(sp, corrupted);
        FAIL("expected InvalidPositionCode");
    } catch (const codec_error& e) {
        CHECK(e.code() == errc::invalid_position_code);
    }
}

TEST_CASE("strong failure decomposes into the two nested encoder failures") {
    // single-attempt runs: every failure is attributable to the outer pass
    // (RankDeficient from the whole-memory call) or the nested pass (window
    // exhaustion), matching the union bound over the two invocations
    const auto& sp = desk14();
    std::mt19937_64 rng(71);
    std::size_t total = 120, fail_outer = 0, fail_inner = 0, fail_other = 0, ok = 0;
    for (std::size_t trial = 0; trial < total; ++trial) {
        const memory_image image = random_image(rng, sp.n, 0.3);
        const bit_vector msg = random_bits(rng, strong_capacity(sp, image.frozen));
        seed_source seeds(trial * 3 + 1);
        try {
            const auto enc = strong_encode(sp, image, msg, seeds, 1);
            REQUIRE(strong_decode(sp, enc.stored) == msg);
            ++ok;
        } catch (const codec_error& e) {
            if (e.code() == errc::rank_deficient)
                ++fail_outer;  // window retries absorb most inner rank failures
            else if (e.code() == errc::message_too_long || e.code() == errc::no_valid_subblock ||
                     e.code() == errc::insufficient_unfrozen)
                ++fail_inner;  // within-capacity MessageTooLong can only be a nested window
            else
                ++fail_other;
        }
    }
    CHECK(fail_other == 0);
    const double fail_rate = static_cast<double>(total - ok) / total;
    const double parts = static_cast<double>(fail_outer + fail_inner) / total;
    const double sigma = std::sqrt(std::max(parts * (1 - parts), 1e-9) / total);
    CHECK(fail_rate <= parts + 3 * sigma);
    CHECK(ok > 0);
}

TEST_CASE("defect cluster at the end of the memory") {
    // the tail must reach past the cluster to collect its writable quota
    const auto& sp = desk14();
    std::mt19937_64 rng(81);
    std::vector<std::uint32_t> idx;
    for (std::size_t pos = sp.n - 2048; pos < sp.n; ++pos) idx.push_back(static_cast<std::uint32_t>(pos));
    const memory_image image{random_bits(rng, sp.n), frozen_set::from_indices(std::move(idx), sp.n)};
    const auto part = find_partition(sp, image.frozen);
    CHECK(part.tail_begin <= sp.n - 2048);  // j sits left of the cluster

    const bit_vector msg = random_bits(rng, strong_capacity(sp, image.frozen) / 2);
    seed_source seeds(4);
    const auto enc = strong_encode(sp, image, msg, seeds);
    CHECK(strong_decode(sp, enc.stored) == msg);
}

TEST_CASE("no interval left of the tail reports NoValidInterval") {
    const auto& sp = desk14();
    // all writable cells sit in the first interval-sized stretch, so the
    // tail consumes them and no v2 candidate remains to its left
    std::vector<std::uint32_t> idx;
    for (std::size_t pos = sp.v2_len; pos < sp.n; ++pos) idx.push_back(static_cast<std::uint32_t>(pos));
    const frozen_set frozen = frozen_set::from_indices(std::move(idx), sp.n);
    try {
        find_partition(sp, frozen);
        FAIL("expected NoValidInterval");
    } catch (const codec_error& e) {
        CHECK(e.code() == errc::no_valid_interval);
    }
    CHECK(strong_capacity(sp, frozen) == 0);
}

TEST_CASE("clustered defects round trip") {
    const auto& sp = desk14();
    std::mt19937_64 rng(33);
    int ok = 0;
    for (int trial = 0; trial < 5; ++trial) {
        frozen_set f = random_frozen(rng, sp.n, sp.n / 8, defect_model::clustered);
        const memory_image image{random_bits(rng, sp.n), std::move(f)};
        const std::size_t cap = strong_capacity(sp, image.frozen);
        if (!cap) continue;
        const bit_vector msg = random_bits(rng, cap / 2);
        seed_source seeds(trial);
        try {
            const auto enc = strong_encode(sp, image, msg, seeds);
            CHECK(strong_decode(sp, enc.stored) == msg);
            ++ok;
        } catch (const codec_error&) {
        }
    }
    CHECK(ok >= 3);
}
