#pragma once

#include <cstdint>

#include "nos/types.hpp"

namespace nos::crc {

/// CRC-11 with generator x^11 + x^10 + x^9 + x^5 + 1. Zero initial register,
/// no reflection, no output inversion.
struct CrcSpec {
    static constexpr int degree = 11;
    /// Generator coefficients without the leading x^11 term.
    static constexpr std::uint32_t poly = 0x621;  // x^10 + x^9 + x^5 + 1
};

/// Parity bits (length 11) of msg, i.e. msg(x) * x^11 mod g(x), MSB first.
BitString parity(const BitString& msg);

BitString crc_append(const BitString& msg);

/// True iff the frame polynomial is divisible by the generator.
bool crc_check(const BitString& frame);

}  // namespace nos::crc
