#pragma once

#include <limits>

#include "nos/types.hpp"

namespace nos {

/// Block-fading channel: nr x nt i.i.d. CN(0, 1), constant over one packet.
struct ChannelRealization {
    CMat H;

    int nr() const { return static_cast<int>(H.rows()); }
    int nt() const { return static_cast<int>(H.cols()); }

    static ChannelRealization draw(SeededRng& rng, int nr, int nt);
};

/// sigma2 = 10^(-snr_db/10); snr_db = +inf gives the noiseless sentinel sigma2 = 0.
struct SnrPoint {
    double snr_db = 0.0;
    double sigma2 = 1.0;

    static SnrPoint from_db(double snr_db);
    static SnrPoint noiseless() { return from_db(std::numeric_limits<double>::infinity()); }
    bool is_noiseless() const noexcept { return sigma2 == 0.0; }
};

/// Y = H S + N with N ~ CN(0, sigma2) element-wise. A unit-variance noise
/// block is always drawn and then scaled, so a given rng state produces the
/// same underlying draws at every SNR.
CMat transmit(const CMat& S, const ChannelRealization& ch, const SnrPoint& snr, SeededRng& rng);

}  // namespace nos
