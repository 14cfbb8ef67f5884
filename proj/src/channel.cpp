#include "nos/channel.hpp"

#include <cmath>
#include <stdexcept>

namespace nos {

ChannelRealization ChannelRealization::draw(SeededRng& rng, int nr, int nt) {
    if (nr < 1 || nt < 1) throw std::invalid_argument("ChannelRealization: antenna counts must be >= 1");
    return {complex_gaussian(rng, nr, nt, 1.0)};
}

SnrPoint SnrPoint::from_db(double snr_db) {
    if (std::isnan(snr_db)) throw std::invalid_argument("SnrPoint: NaN");
    if (snr_db == -std::numeric_limits<double>::infinity()) throw std::invalid_argument("SnrPoint: -inf dB");
    SnrPoint p;
    p.snr_db = snr_db;
    p.sigma2 = std::isinf(snr_db) ? 0.0 : std::pow(10.0, -snr_db / 10.0);
    return p;
}

CMat transmit(const CMat& S, const ChannelRealization& ch, const SnrPoint& snr, SeededRng& rng) {
    if (S.rows() != ch.H.cols()) throw std::invalid_argument("transmit: S rows != number of transmit antennas");
    if (snr.sigma2 < 0.0) throw std::invalid_argument("transmit: negative noise variance");
    CMat Y = ch.H * S;
    const CMat unit = complex_gaussian(rng, static_cast<int>(Y.rows()), static_cast<int>(Y.cols()), 1.0);
    if (snr.sigma2 > 0.0) Y += std::sqrt(snr.sigma2) * unit;
    return Y;
}

}  // namespace nos
