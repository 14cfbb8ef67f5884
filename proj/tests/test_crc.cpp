#include <doctest.h>

#include <cmath>

#include "nos/crc.hpp"
#include "oracles.hpp"

using namespace nos;

namespace {

std::vector<int> to_ints(const BitString& b) { return {b.bits().begin(), b.bits().end()}; }

}  // namespace

TEST_CASE("all-zero message has all-zero parity") {
    CHECK(crc::parity(BitString::zeros(32)) == BitString::zeros(11));
}

TEST_CASE("parity of x^42 matches long division") {
    std::vector<std::uint8_t> m(32, 0);
    m[0] = 1;
    const BitString p = crc::parity(BitString(m));
    CHECK(to_ints(p) == oracle::crc11_long_division(std::vector<int>(m.begin(), m.end())));
    CHECK(p != BitString::zeros(11));
}

TEST_CASE("parity agrees with long division on random messages") {
    SeededRng rng(21);
    for (int trial = 0; trial < 2000; ++trial) {
        const auto n = 1 + static_cast<std::size_t>(rng.next_u64() % 80);
        const BitString msg = random_bits(rng, n);
        REQUIRE(to_ints(crc::parity(msg)) == oracle::crc11_long_division(to_ints(msg)));
    }
}

TEST_CASE("appended frames pass and single-bit errors fail") {
    SeededRng rng(22);
    for (int trial = 0; trial < 200; ++trial) {
        const BitString msg = random_bits(rng, 21);
        const BitString frame = crc::crc_append(msg);
        REQUIRE(frame.size() == 32);
        REQUIRE(frame.slice(0, 21) == msg);
        REQUIRE(crc::crc_check(frame));
        for (std::size_t i = 0; i < frame.size(); ++i) {
            BitString bad = frame;
            bad.flip(i);
            REQUIRE_FALSE(crc::crc_check(bad));
        }
    }
}

TEST_CASE("every burst of length <= 11 is detected on 59-bit frames") {
    SeededRng rng(23);
    const BitString frame = crc::crc_append(random_bits(rng, 48));
    REQUIRE(frame.size() == 59);
    for (std::size_t len = 1; len <= 11; ++len) {
        // burst: first and last bit set, interior arbitrary
        const std::uint32_t interior = len > 2 ? (1u << (len - 2)) : 1u;
        for (std::size_t start = 0; start + len <= frame.size(); ++start) {
            for (std::uint32_t pat = 0; pat < interior; ++pat) {
                BitString bad = frame;
                bad.flip(start);
                if (len > 1) {
                    bad.flip(start + len - 1);
                    for (std::size_t k = 0; k + 2 < len; ++k)
                        if ((pat >> k) & 1u) bad.flip(start + 1 + k);
                }
                REQUIRE_FALSE(crc::crc_check(bad));
            }
        }
    }
}

TEST_CASE("random corruption goes undetected at rate 2^-11") {
    SeededRng rng(24);
    const int trials = 1000000;
    int accepted = 0;
    const BitString frame = crc::crc_append(random_bits(rng, 32));
    for (int t = 0; t < trials; ++t) {
        BitString bad = frame;
        bool changed = false;
        for (std::size_t i = 0; i < bad.size(); ++i)
            if (rng.bit()) {
                bad.flip(i);
                changed = true;
            }
        if (!changed) continue;
        accepted += crc::crc_check(bad) ? 1 : 0;
    }
    const double p = std::ldexp(1.0, -11);
    const double sigma = std::sqrt(trials * p * (1 - p));
    CHECK(std::abs(accepted - trials * p) < 3 * sigma);
}

TEST_CASE("parity is linear") {
    SeededRng rng(25);
    for (int t = 0; t < 500; ++t) {
        const BitString a = random_bits(rng, 40), b = random_bits(rng, 40);
        std::vector<std::uint8_t> x(40);
        for (std::size_t i = 0; i < 40; ++i) x[i] = a[i] ^ b[i];
        const BitString pa = crc::parity(a), pb = crc::parity(b), px = crc::parity(BitString(x));
        for (std::size_t i = 0; i < 11; ++i) REQUIRE(px[i] == (pa[i] ^ pb[i]));
    }
}

TEST_CASE("crc_check rejects frames of 11 bits or fewer") {
    CHECK_THROWS_AS(crc::crc_check(BitString::zeros(11)), std::invalid_argument);
    CHECK_NOTHROW(crc::crc_check(BitString::zeros(12)));
}
