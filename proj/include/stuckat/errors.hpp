#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace stuckat {

/// Failure categories surfaced by the codecs and the experiment harness.
/// Encoder-side failures (rank_deficient, message_too_long, ...) are expected
/// events with known probabilities; the harness records them as data.
enum class errc {
    rank_deficient,
    message_too_long,
    malformed_chain,
    insufficient_unfrozen,
    no_valid_interval,
    no_valid_subblock,
    not_encodable,
    search_exhausted,
    invalid_position_code,
    dimension_mismatch,
    parameter_overflow,
    bad_argument,
    bad_format,
};

inline std::string_view errc_name(errc e) {
    switch (e) {
        case errc::rank_deficient: return "RankDeficient";
        case errc::message_too_long: return "MessageTooLong";
        case errc::malformed_chain: return "MalformedChain";
        case errc::insufficient_unfrozen: return "InsufficientUnfrozen";
        case errc::no_valid_interval: return "NoValidInterval";
        case errc::no_valid_subblock: return "NoValidSubblock";
        case errc::not_encodable: return "NotEncodable";
        case errc::search_exhausted: return "SearchExhausted";
        case errc::invalid_position_code: return "InvalidPositionCode";
        case errc::dimension_mismatch: return "DimensionMismatch";
        case errc::parameter_overflow: return "ParameterOverflow";
        case errc::bad_argument: return "BadArgument";
        case errc::bad_format: return "BadFormat";
    }
    return "Unknown";
}

class codec_error : public std::runtime_error {
public:
    codec_error(errc code, const std::string& what)
        : std::runtime_error(std::string(errc_name(code)) + ": " + what), code_(code) {}

    errc code() const noexcept { return code_; }

private:
    errc code_;
};

[[noreturn]] inline void raise(errc code, const std::string& what) {
    throw codec_error(code, what);
}

}  // namespace stuckat
