#pragma once

#include <cstdint>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "stuckat/bits.hpp"
#include "stuckat/block_codec.hpp"
#include "stuckat/errors.hpp"
#include "stuckat/strong_codec.hpp"

namespace stuckat::io {

inline constexpr const char* image_magic = "stuckat-image v1";
inline constexpr const char* stored_magic = "stuckat-stored v1";
inline constexpr const char* meta_magic = "stuckat-meta v1";
inline constexpr const char* profile_magic = "stuckat-profile v1";

inline std::string hex_of_bits(const bit_vector& v) {
    static const char* digits = "0123456789abcdef";
    std::string out;
    out.reserve((v.size() + 3) / 4);
    for (std::size_t i = 0; i < v.size(); i += 4) {
        unsigned nib = 0;
        for (unsigned j = 0; j < 4; ++j) nib = (nib << 1) | (i + j < v.size() ? v.get(i + j) : 0u);
        out.push_back(digits[nib & 15u]);
    }
    return out;
}

inline bit_vector bits_of_hex(const std::string& hex, std::size_t nbits) {
    bit_vector v(nbits);
    for (std::size_t i = 0; i < nbits; ++i) {
        const std::size_t d = i / 4;
        if (d >= hex.size()) raise(errc::bad_format, "hex string shorter than bit count");
        const char c = hex[d];
        unsigned nib;
        if (c >= '0' && c <= '9')
            nib = static_cast<unsigned>(c - '0');
        else if (c >= 'a' && c <= 'f')
            nib = static_cast<unsigned>(c - 'a') + 10;
        else if (c >= 'A' && c <= 'F')
            nib = static_cast<unsigned>(c - 'A') + 10;
        else
            raise(errc::bad_format, "invalid hex digit");
        v.set(i, (nib >> (3 - i % 4)) & 1u);
    }
    return v;
}

inline std::string expect_line(std::istream& is, const char* what) {
    std::string line;
    if (!std::getline(is, line)) raise(errc::bad_format, std::string("missing ") + what);
    if (!line.empty() && line.back() == '\r') line.pop_back();
    return line;
}

/// Text header (N, frozen count), hex cover bits, then one 1-based frozen
/// index per line.
inline void write_image(const memory_image& image, std::ostream& os) {
    os << image_magic << "\n";
    os << "n " << image.cover.size() << "\n";
    os << "frozen " << image.frozen.size() << "\n";
    os << hex_of_bits(image.cover) << "\n";
    for (std::uint32_t i : image.frozen.indices()) os << (i + 1) << "\n";
}

inline memory_image read_image(std::istream& is) {
    if (expect_line(is, "magic") != image_magic) raise(errc::bad_format, "not a stuckat image file");
    std::size_t n = 0, count = 0;
    {
        std::istringstream h(expect_line(is, "n header"));
        std::string key;
        h >> key >> n;
        if (key != "n" || n == 0) raise(errc::bad_format, "bad n header");
    }
    {
        std::istringstream h(expect_line(is, "frozen header"));
        std::string key;
        h >> key >> count;
        if (key != "frozen") raise(errc::bad_format, "bad frozen header");
    }
    bit_vector cover = bits_of_hex(expect_line(is, "cover bits"), n);
    std::vector<std::uint32_t> idx;
    idx.reserve(count);
    for (std::size_t i = 0; i < count; ++i) {
        const std::string line = expect_line(is, "frozen index");
        const std::uint64_t one_based = std::stoull(line);
        if (one_based == 0 || one_based > n) raise(errc::bad_format, "frozen index out of range");
        idx.push_back(static_cast<std::uint32_t>(one_based - 1));
    }
    return {std::move(cover), frozen_set::from_indices(std::move(idx), n)};
}

/// Raw N bits with a header; deliberately contains nothing but the vector,
/// so a decoder reading this file cannot learn the frozen set or rho.
inline void write_stored(const bit_vector& v, std::ostream& os) {
    os << stored_magic << "\n";
    os << "n " << v.size() << "\n";
    os << hex_of_bits(v) << "\n";
}

inline bit_vector read_stored(std::istream& is) {
    if (expect_line(is, "magic") != stored_magic) raise(errc::bad_format, "not a stuckat stored-vector file");
    std::istringstream h(expect_line(is, "n header"));
    std::string key;
    std::size_t n = 0;
    h >> key >> n;
    if (key != "n" || n == 0) raise(errc::bad_format, "bad n header");
    return bits_of_hex(expect_line(is, "bits"), n);
}

/// Side-channel metadata as a literal bit string (seed o first o count).
inline void write_metadata(const bit_vector& meta_bits, std::ostream& os) {
    os << meta_magic << "\n";
    os << meta_bits.to_string() << "\n";
}

inline bit_vector read_metadata(std::istream& is) {
    if (expect_line(is, "magic") != meta_magic) raise(errc::bad_format, "not a stuckat metadata file");
    return bit_vector::from_string(expect_line(is, "bits"));
}

namespace detail {

inline std::map<std::string, std::string> read_kv(std::istream& is) {
    std::map<std::string, std::string> kv;
    std::string line;
    while (std::getline(is, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty() || line[0] == '#') continue;
        const auto sp = line.find(' ');
        if (sp == std::string::npos) raise(errc::bad_format, "malformed key-value line: " + line);
        kv[line.substr(0, sp)] = line.substr(sp + 1);
    }
    return kv;
}

inline const std::string& need(const std::map<std::string, std::string>& kv, const std::string& key) {
    auto it = kv.find(key);
    if (it == kv.end()) raise(errc::bad_format, "profile missing key: " + key);
    return it->second;
}

}  // namespace detail

inline void write_profile(const param_profile& p, std::ostream& os) {
    os << profile_magic << "\n";
    os << "kind sidechannel\n";
    os << "n " << p.n << "\n";
    os << "c " << p.c << "\n";
    os << "b " << p.b << "\n";
    os << "mu_log2 " << p.mu_log2 << "\n";
    os << "slack " << p.slack << "\n";
    os << "pinned_seed " << (p.pinned_seed.empty() ? std::string("-") : p.pinned_seed.to_string()) << "\n";
}

inline void write_profile(const strong_profile& sp, std::ostream& os) {
    os << profile_magic << "\n";
    os << "kind strong\n";
    os << "n " << sp.n << "\n";
    os << "c " << sp.c << "\n";
    os << "k_const " << sp.meta_const << "\n";
    os << "delta_den " << sp.delta_den << "\n";
    os << "len22 " << sp.len22 << "\n";
    os << "mod2 " << sp.mod2 << "\n";
    os << "mod4 " << sp.mod4 << "\n";
    os << "rho_max " << sp.rho_max << "\n";
    os << "outer_mu_log2 " << sp.outer.mu_log2 << "\n";
    os << "outer_slack " << sp.outer.slack << "\n";
    os << "inner_slack " << sp.inner.slack << "\n";
    os << "inner_seed " << sp.inner.pinned_seed.to_string() << "\n";
}

struct any_profile {
    std::optional<param_profile> sidechannel;
    std::optional<strong_profile> strong;
};

/// Load either profile kind. Derived quantities are recomputed and checked
/// against the stored values, so a stale or edited file fails loudly.
inline any_profile read_profile(std::istream& is) {
    if (expect_line(is, "magic") != profile_magic) raise(errc::bad_format, "not a stuckat profile file");
    const auto kv = detail::read_kv(is);
    const std::string kind = detail::need(kv, "kind");
    any_profile out;
    if (kind == "sidechannel") {
        const std::string pinned = detail::need(kv, "pinned_seed");
        out.sidechannel = param_profile::custom(
            std::stoull(detail::need(kv, "n")), static_cast<unsigned>(std::stoul(detail::need(kv, "c"))),
            static_cast<unsigned>(std::stoul(detail::need(kv, "b"))), std::stoi(detail::need(kv, "mu_log2")),
            static_cast<unsigned>(std::stoul(detail::need(kv, "slack"))),
            pinned == "-" ? bit_vector() : bit_vector::from_string(pinned));
    } else if (kind == "strong") {
        strong_profile sp = strong_profile::make(
            std::stoull(detail::need(kv, "n")), static_cast<unsigned>(std::stoul(detail::need(kv, "c"))),
            static_cast<unsigned>(std::stoul(detail::need(kv, "delta_den"))), std::stoull(detail::need(kv, "len22")),
            std::stoi(detail::need(kv, "outer_mu_log2")),
            static_cast<unsigned>(std::stoul(detail::need(kv, "outer_slack"))),
            static_cast<unsigned>(std::stoul(detail::need(kv, "inner_slack"))),
            std::stod(detail::need(kv, "rho_max")), bit_vector::from_string(detail::need(kv, "inner_seed")));
        if (sp.mod2 != std::stoull(detail::need(kv, "mod2")) || sp.mod4 != std::stoull(detail::need(kv, "mod4")))
            raise(errc::bad_format, "stored moduli disagree with derived values");
        if (sp.meta_const != std::stoul(detail::need(kv, "k_const")))
            raise(errc::bad_format, "stored K disagrees with derived value");
        out.strong = std::move(sp);
    } else {
        raise(errc::bad_format, "unknown profile kind: " + kind);
    }
    return out;
}

template <typename T>
void write_file(const T& value, const std::string& path, void (*writer)(const T&, std::ostream&)) {
    std::ofstream os(path);
    if (!os) raise(errc::bad_format, "cannot open for writing: " + path);
    writer(value, os);
}

}  // namespace stuckat::io
