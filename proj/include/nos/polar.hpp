#pragma once

#include <optional>
#include <vector>

#include "nos/channel.hpp"
#include "nos/types.hpp"

namespace nos::polar {

/// Polar code of length mother_n shortened to n_coded. Positions
/// u_i with i >= n_coded are frozen so the dropped tail of the codeword is
/// always zero; the remaining info positions are the most reliable ones by
/// polarization weight.
class PolarSpec {
public:
    /// n_crc is 0 or 11. mother_n defaults to the smallest power of two >= n_coded.
    PolarSpec(int n_info, int n_crc, int n_coded, int list_size, int mother_n = 0);

    int n_info() const noexcept { return n_info_; }
    int n_crc() const noexcept { return n_crc_; }
    int frame_bits() const noexcept { return n_info_ + n_crc_; }
    int n_coded() const noexcept { return n_coded_; }
    int mother_n() const noexcept { return mother_n_; }
    int list_size() const noexcept { return list_size_; }

    /// Info positions in ascending index order (frame bit k goes to info_positions()[k]).
    const std::vector<int>& info_positions() const noexcept { return info_pos_; }
    const std::vector<std::uint8_t>& frozen_mask() const noexcept { return frozen_; }

    PolarSpec with_list_size(int L) const;

private:
    int n_info_, n_crc_, n_coded_, list_size_, mother_n_;
    std::vector<int> info_pos_;
    std::vector<std::uint8_t> frozen_;
};

/// Polarization weight sum_b bit_b(i) * 2^(b/4); larger is more reliable.
double polarization_weight(int index);
/// Indices 0..n-1 from least to most reliable (ties: lower index first).
std::vector<int> reliability_order(int n);

/// u * F^{(x)log2 N} over GF(2), natural order, F = [1 0; 1 1].
std::vector<std::uint8_t> polar_transform(const std::vector<std::uint8_t>& u);

/// Places the frame on the info positions and returns the first n_coded
/// codeword bits.
BitString polar_encode(const BitString& frame, const PolarSpec& spec);

struct PolarCandidate {
    BitString frame;
    double metric = 0.0;  // -log P(path | llr)
};

struct PolarDecodeResult {
    std::optional<BitString> frame;  // null when no candidate is accepted
    bool crc_pass = false;
    std::vector<PolarCandidate> candidates;  // ascending metric
};

/// Textbook recursive successive cancellation on n_coded LLRs (positive
/// means bit 0). Returns the frame bits without any CRC check.
BitString sc_decode(const std::vector<double>& llrs, const PolarSpec& spec);

/// Successive cancellation list decoding with exact LLR updates and path
/// metrics. With use_crc the first candidate in metric order whose frame
/// passes CRC is returned; otherwise the best candidate is returned as is.
PolarDecodeResult scl_decode(const std::vector<double>& llrs, const PolarSpec& spec, bool use_crc = true);

/// Gray QPSK: (b0, b1) -> ((1 - 2 b0) + j (1 - 2 b1)) / sqrt(2).
CVec qpsk_map(const BitString& bits);

/// Exact per-bit LLRs of one received column over all 4^nt QPSK vectors,
/// likelihood exp(-||y - Hx||^2 / sigma2). Bits 2a, 2a+1 belong to antenna a.
/// sigma2 = 0 gives +-inf (0 on exact ties).
std::vector<double> ml_mimo_llr(const CVec& y, const CMat& H, double sigma2);

struct PipelineOutcome {
    BitString frame;  // transmitted info ++ crc
    PolarDecodeResult ca;                  // CRC-aided list decoding
    std::optional<PolarDecodeResult> plain;  // list decoding without CRC selection
};

/// crc_append -> polar_encode -> qpsk_map -> reshape nt x mc -> transmit ->
/// per-column ML LLRs -> SCL.
PipelineOutcome qpsk_pipeline(const BitString& msg, const ChannelRealization& ch, const SnrPoint& snr, SeededRng& rng,
                              const PolarSpec& spec, bool also_plain = false);

}  // namespace nos::polar
