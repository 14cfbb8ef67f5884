#pragma once

#include <vector>

#include "nos/codebook.hpp"
#include "nos/types.hpp"

namespace nos {

/// Frame layout: info bits followed by 11 CRC bits, cut left to right into V
/// segments of m bits each.
struct PacketLayout {
    int info_bits = 0;
    int crc_bits = 11;
    int V = 0;
    int m = 0;

    /// info_bits = V*m - 11.
    static PacketLayout for_codebook(int V, int M);

    int frame_bits() const noexcept { return info_bits + crc_bits; }
    int M() const noexcept { return 1 << m; }
    void validate() const;
};

struct EncodedPacket {
    BitString frame;           // info ++ crc
    std::vector<int> indices;  // one per encoder, transmit order
    CVec s;                    // superimposed codeword, length D/2
};

/// Split a frame into V big-endian segment indices.
std::vector<int> frame_to_indices(const BitString& frame, const PacketLayout& layout);
BitString indices_to_frame(const std::vector<int>& indices, const PacketLayout& layout);

/// s = sum_v C[v,:,m_v] for the given indices.
CVec superimpose(const Codebook& cb, const std::vector<int>& indices);

EncodedPacket encode(const BitString& msg, const Codebook& cb, const PacketLayout& layout);

/// S[a, t] = s[t*nt + a]: each time slot takes nt consecutive entries.
CMat reshape_space_time(const CVec& s, int nt, int mc);

/// Inverse of reshape_space_time (column-major vectorization).
CVec vectorize(const CMat& S);

}  // namespace nos
