#include <doctest.h>

#include "designer.hpp"
#include "fixtures.hpp"
#include "nos/crc.hpp"
#include "nos/encoder.hpp"
#include "oracles.hpp"

using namespace nos;

TEST_CASE("packet layout") {
    const auto l = PacketLayout::for_codebook(4, 256);
    CHECK(l.m == 8);
    CHECK(l.info_bits == 21);
    CHECK(l.frame_bits() == 32);
    CHECK(l.M() == 256);
    CHECK_THROWS(PacketLayout::for_codebook(2, 8));  // 6 bits cannot carry 11 CRC bits
    PacketLayout bad = l;
    bad.info_bits = 20;
    CHECK_THROWS(bad.validate());
}

TEST_CASE("zero indices superimpose the first codeword of every encoder") {
    const Codebook cb = testing::random_codebook(2, 8, 64, 1);
    const CVec s = superimpose(cb, {0, 0});
    CHECK((s - (cb.word(0, 0) + cb.word(1, 0))).norm() == 0.0);
    CHECK_THROWS(superimpose(cb, {0, 64}));
    CHECK_THROWS(superimpose(cb, {0}));
}

TEST_CASE("orthogonal codebook gives ||s||^2 = D/2") {
    const Codebook cb = testing::orthogonal_codebook(2, 256, 64);
    const auto layout = PacketLayout::for_codebook(2, 64);
    SeededRng rng(2);
    for (int t = 0; t < 50; ++t) {
        const auto pkt = encode(random_bits(rng, static_cast<std::size_t>(layout.info_bits)), cb, layout);
        CHECK(pkt.s.squaredNorm() == doctest::Approx(128.0));
    }
}

TEST_CASE("encode matches an independent CRC and lookup-table recompute") {
    const Codebook cb = testing::random_codebook(4, 64, 256, 3);
    const auto layout = PacketLayout::for_codebook(4, 256);
    SeededRng rng(4);
    for (int t = 0; t < 200; ++t) {
        const BitString msg = random_bits(rng, 21);
        const auto pkt = encode(msg, cb, layout);

        std::vector<int> frame(msg.bits().begin(), msg.bits().end());
        const auto par = oracle::crc11_long_division(frame);
        frame.insert(frame.end(), par.begin(), par.end());
        CVec s = CVec::Zero(32);
        for (int v = 0; v < 4; ++v) {
            const std::vector<int> seg(frame.begin() + 8 * v, frame.begin() + 8 * (v + 1));
            const auto idx = static_cast<int>(oracle::big_endian_value(seg));
            REQUIRE(pkt.indices[static_cast<std::size_t>(v)] == idx);
            s += cb.word(v, idx);
        }
        REQUIRE((pkt.s - s).cwiseAbs().maxCoeff() < 1e-12);
        REQUIRE(crc::crc_check(pkt.frame));
        REQUIRE(indices_to_frame(pkt.indices, layout) == pkt.frame);
    }
}

TEST_CASE("encode rejects mismatched inputs") {
    const Codebook cb = testing::random_codebook(4, 64, 256, 3);
    CHECK_THROWS(encode(BitString::zeros(20), cb, PacketLayout::for_codebook(4, 256)));
    CHECK_THROWS(encode(BitString::zeros(13), cb, PacketLayout::for_codebook(4, 64)));
}

TEST_CASE("reshape convention") {
    CVec s(4);
    s << cplx(0, 0), cplx(1, 0), cplx(2, 0), cplx(3, 0);
    const CMat S = reshape_space_time(s, 2, 2);
    CHECK(S(0, 0) == s(0));
    CHECK(S(1, 0) == s(1));
    CHECK(S(0, 1) == s(2));
    CHECK(S(1, 1) == s(3));

    const CMat row = reshape_space_time(s, 1, 4);
    CHECK(row.rows() == 1);
    for (int t = 0; t < 4; ++t) CHECK(row(0, t) == s(t));

    SeededRng rng(5);
    for (int t = 0; t < 20; ++t) {
        const CVec z = complex_gaussian(rng, 32, 1, 1.0).col(0);
        const CMat Z = reshape_space_time(z, 4, 8);
        REQUIRE(Z == oracle::reshape_loops(z, 4, 8));
        REQUIRE(vectorize(Z) == z);
    }
    CHECK_THROWS(reshape_space_time(s, 3, 2));
}

TEST_CASE("average block energy is D/2") {
    const Codebook cb = testing::random_codebook(4, 64, 64, 6);
    const auto layout = PacketLayout::for_codebook(4, 64);
    SeededRng rng(7);
    double acc = 0.0;
    const int n = 20000;
    for (int t = 0; t < n; ++t)
        acc += reshape_space_time(encode(random_bits(rng, 13), cb, layout).s, 4, 8).squaredNorm();
    CHECK(std::abs(acc / n / 32.0 - 1.0) < 0.02);
}

TEST_CASE("noiseless brute-force ML recovers every message of a tiny code") {
    const Codebook cb = testing::random_codebook(2, 8, 128, 8);
    const auto layout = PacketLayout::for_codebook(2, 128);
    REQUIRE(layout.info_bits == 3);
    for (std::uint32_t w = 0; w < 8; ++w) {
        const BitString msg = index_to_bits(w, 3);
        const auto pkt = encode(msg, cb, layout);
        const auto best = oracle::brute_force_ml(pkt.s, {cb.slice(0), cb.slice(1)});
        CHECK(indices_to_frame(best, layout).slice(0, 3) == msg);
    }
}
