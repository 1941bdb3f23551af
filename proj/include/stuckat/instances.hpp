#pragma once

#include <algorithm>
#include <cstdint>
#include <numeric>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "stuckat/bits.hpp"
#include "stuckat/block_codec.hpp"
#include "stuckat/errors.hpp"

namespace stuckat {

enum class defect_model { uniform, clustered, adversarial_prefix };

inline std::string to_string(defect_model m) {
    switch (m) {
        case defect_model::uniform: return "uniform-random";
        case defect_model::clustered: return "clustered";
        case defect_model::adversarial_prefix: return "adversarial-prefix";
    }
    return "?";
}

inline defect_model defect_model_from_string(const std::string& s) {
    if (s == "uniform-random" || s == "uniform") return defect_model::uniform;
    if (s == "clustered") return defect_model::clustered;
    if (s == "adversarial-prefix" || s == "prefix") return defect_model::adversarial_prefix;
    raise(errc::bad_argument, "unknown defect model: " + s);
}

struct instance_spec {
    std::size_t n = 0;
    unsigned c = 4;
    double rho = 0.0;
    defect_model model = defect_model::uniform;
    std::optional<std::size_t> msg_len;  // nullopt = max-rate for the codec under test
    std::size_t trials = 0;
    std::uint64_t rng_seed = 0;
};

inline std::uint64_t mix64(std::uint64_t a, std::uint64_t b) {
    std::uint64_t z = a ^ (b + 0x9e3779b97f4a7c15ull + (a << 6) + (a >> 2));
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
}

/// Independent stream per (seed, trial index).
inline std::mt19937_64 trial_rng(std::uint64_t seed, std::uint64_t index) {
    return std::mt19937_64(mix64(seed, index));
}

inline bit_vector random_bits(std::mt19937_64& rng, std::size_t len) {
    bit_vector v(len);
    for (std::size_t i = 0; i < len; i += 64) {
        const std::uint64_t w = rng();
        for (std::size_t j = 0; j < 64 && i + j < len; ++j) v.set(i + j, (w >> j) & 1u);
    }
    return v;
}

inline frozen_set random_frozen(std::mt19937_64& rng, std::size_t n, std::size_t count, defect_model model) {
    if (count > n) raise(errc::bad_argument, "frozen count exceeds N");
    std::vector<std::uint32_t> idx;
    idx.reserve(count);
    switch (model) {
        case defect_model::uniform: {
            std::vector<std::uint32_t> pool(n);
            std::iota(pool.begin(), pool.end(), 0u);
            for (std::size_t i = 0; i < count; ++i) {
                std::uniform_int_distribution<std::size_t> pick(i, n - 1);
                std::swap(pool[i], pool[pick(rng)]);
                idx.push_back(pool[i]);
            }
            break;
        }
        case defect_model::clustered: {
            std::uniform_int_distribution<std::size_t> start(0, n - count);
            const std::size_t s = count ? start(rng) : 0;
            for (std::size_t i = 0; i < count; ++i) idx.push_back(static_cast<std::uint32_t>(s + i));
            break;
        }
        case defect_model::adversarial_prefix:
            for (std::size_t i = 0; i < count; ++i) idx.push_back(static_cast<std::uint32_t>(i));
            break;
    }
    return frozen_set::from_indices(std::move(idx), n);
}

/// Deterministic per (spec.rng_seed, trial index): frozen set, then cover.
/// The message is drawn afterwards from the same stream once its length is
/// known (max-rate depends on the codec and the frozen pattern).
inline memory_image generate_image(const instance_spec& spec, std::uint64_t index, std::mt19937_64& rng) {
    const std::size_t count = static_cast<std::size_t>(spec.rho * static_cast<double>(spec.n));
    frozen_set frozen = random_frozen(rng, spec.n, count, spec.model);
    bit_vector cover = random_bits(rng, spec.n);
    (void)index;
    return {std::move(cover), std::move(frozen)};
}

struct generated_instance {
    memory_image image;
    bit_vector message;
};

inline generated_instance generate_instance(const instance_spec& spec, std::uint64_t index, std::size_t msg_len) {
    std::mt19937_64 rng = trial_rng(spec.rng_seed, index);
    memory_image image = generate_image(spec, index, rng);
    bit_vector msg = random_bits(rng, msg_len);
    return {std::move(image), std::move(msg)};
}

}  // namespace stuckat
