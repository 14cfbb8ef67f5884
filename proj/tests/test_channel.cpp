#include <doctest.h>

#include <cmath>

#include "fixtures.hpp"
#include "designer.hpp"
#include "nos/channel.hpp"
#include "nos/encoder.hpp"

using namespace nos;

TEST_CASE("SNR conversion") {
    CHECK(SnrPoint::from_db(0).sigma2 == 1.0);
    CHECK(SnrPoint::from_db(10).sigma2 == doctest::Approx(0.1));
    CHECK(SnrPoint::from_db(-3).sigma2 == doctest::Approx(std::pow(10.0, 0.3)));
    CHECK(SnrPoint::noiseless().sigma2 == 0.0);
    CHECK(SnrPoint::noiseless().is_noiseless());
    CHECK_THROWS(SnrPoint::from_db(std::nan("")));
    CHECK_THROWS(SnrPoint::from_db(-INFINITY));
}

TEST_CASE("noiseless transmission is exactly H S") {
    SeededRng rng(1);
    const auto ch = ChannelRealization::draw(rng, 3, 2);
    const CMat S = complex_gaussian(rng, 2, 5, 1.0);
    CHECK(transmit(S, ch, SnrPoint::noiseless(), rng) == ch.H * S);
}

TEST_CASE("identity channel adds noise of variance sigma2") {
    SeededRng rng(2);
    ChannelRealization ch{CMat::Identity(4, 4)};
    CMat S = CMat::Zero(4, 1);
    S(2, 0) = 1.0;
    const SnrPoint snr = SnrPoint::from_db(3);
    double acc = 0.0;
    const int n = 50000;
    for (int t = 0; t < n; ++t) acc += (transmit(S, ch, snr, rng) - S).squaredNorm();
    CHECK(acc / (4.0 * n) == doctest::Approx(snr.sigma2).epsilon(0.02));
}

TEST_CASE("the unit noise draw does not depend on SNR") {
    SeededRng a(3), b(3);
    ChannelRealization ch{CMat::Identity(2, 2)};
    const CMat S = CMat::Zero(2, 3);
    const CMat y1 = transmit(S, ch, SnrPoint::from_db(0), a);
    const CMat y2 = transmit(S, ch, SnrPoint::from_db(20), b);
    CHECK((y1 * 0.1 - y2).norm() < 1e-12);
}

TEST_CASE("measured SNR equals 1/sigma2 for an energy-normalized codebook") {
    const Codebook cb = testing::random_codebook(4, 64, 64, 4);
    const auto layout = PacketLayout::for_codebook(4, 64);
    const SnrPoint snr = SnrPoint::from_db(8);
    SeededRng rng(5);
    double sig = 0.0, noise = 0.0;
    for (int t = 0; t < 100000; ++t) {
        const CMat S = reshape_space_time(encode(random_bits(rng, 13), cb, layout).s, 4, 8);
        const auto ch = ChannelRealization::draw(rng, 4, 4);
        const CMat HS = ch.H * S;
        sig += HS.squaredNorm();
        noise += (transmit(S, ch, snr, rng) - HS).squaredNorm();
    }
    const double measured_db = 10.0 * std::log10(sig / (4.0 * noise));
    CHECK(std::abs(measured_db - 8.0) < 0.1);
}

TEST_CASE("transmit checks shapes") {
    SeededRng rng(6);
    const auto ch = ChannelRealization::draw(rng, 4, 4);
    CHECK_THROWS(transmit(CMat::Zero(3, 2), ch, SnrPoint::from_db(0), rng));
    CHECK_THROWS(ChannelRealization::draw(rng, 0, 2));
}
