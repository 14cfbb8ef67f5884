#include "nos/crc.hpp"

#include <stdexcept>

namespace nos::crc {

namespace {

constexpr std::uint32_t kMask = (1u << CrcSpec::degree) - 1;

std::uint32_t shift_in(std::uint32_t reg, std::span<const std::uint8_t> bits) {
    for (auto b : bits) {
        const std::uint32_t top = ((reg >> (CrcSpec::degree - 1)) & 1u) ^ b;
        reg = (reg << 1) & kMask;
        if (top) reg ^= CrcSpec::poly;
    }
    return reg;
}

}  // namespace

BitString parity(const BitString& msg) {
    if (msg.empty()) throw std::invalid_argument("crc: empty message");
    const std::uint32_t reg = shift_in(0, msg.bits());
    return index_to_bits(reg, CrcSpec::degree);
}

BitString crc_append(const BitString& msg) { return msg.concat(parity(msg)); }

bool crc_check(const BitString& frame) {
    if (frame.size() <= static_cast<std::size_t>(CrcSpec::degree))
        throw std::invalid_argument("crc_check: frame must be longer than 11 bits");
    const auto bits = frame.bits();
    const auto body = bits.first(bits.size() - CrcSpec::degree);
    std::uint32_t reg = shift_in(0, body);
    for (int i = 0; i < CrcSpec::degree; ++i) reg ^= static_cast<std::uint32_t>(bits[body.size() + static_cast<std::size_t>(i)]) << (CrcSpec::degree - 1 - i);
    return reg == 0;
}

}  // namespace nos::crc
