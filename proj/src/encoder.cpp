#include "nos/encoder.hpp"

#include <stdexcept>
#include <string>

#include "nos/crc.hpp"

namespace nos {

PacketLayout PacketLayout::for_codebook(int V, int M) {
    PacketLayout l;
    l.V = V;
    l.m = log2_exact(static_cast<std::uint64_t>(M));
    l.info_bits = V * l.m - l.crc_bits;
    l.validate();
    return l;
}

void PacketLayout::validate() const {
    if (V < 1 || m < 1 || m > 24) throw std::invalid_argument("PacketLayout: need V >= 1 and 1 <= m <= 24");
    if (crc_bits != crc::CrcSpec::degree) throw std::invalid_argument("PacketLayout: crc_bits must be 11");
    if (info_bits < 1) throw std::invalid_argument("PacketLayout: V*m must exceed the 11 CRC bits");
    if (V * m != info_bits + crc_bits)
        throw std::invalid_argument("PacketLayout: V*m (" + std::to_string(V * m) + ") != info + crc (" +
                                    std::to_string(info_bits + crc_bits) + ")");
}

std::vector<int> frame_to_indices(const BitString& frame, const PacketLayout& layout) {
    if (frame.size() != static_cast<std::size_t>(layout.frame_bits()))
        throw std::invalid_argument("frame_to_indices: frame length mismatch");
    std::vector<int> idx(static_cast<std::size_t>(layout.V));
    for (int v = 0; v < layout.V; ++v)
        idx[static_cast<std::size_t>(v)] = static_cast<int>(bits_to_index(frame.slice(static_cast<std::size_t>(v * layout.m), static_cast<std::size_t>(layout.m))));
    return idx;
}

BitString indices_to_frame(const std::vector<int>& indices, const PacketLayout& layout) {
    if (indices.size() != static_cast<std::size_t>(layout.V))
        throw std::invalid_argument("indices_to_frame: expected V indices");
    std::vector<std::uint8_t> bits;
    bits.reserve(static_cast<std::size_t>(layout.frame_bits()));
    for (int idx : indices) {
        if (idx < 0 || idx >= layout.M()) throw std::invalid_argument("indices_to_frame: index out of range");
        for (int i = layout.m - 1; i >= 0; --i) bits.push_back(static_cast<std::uint8_t>((idx >> i) & 1));
    }
    return BitString(std::move(bits));
}

CVec superimpose(const Codebook& cb, const std::vector<int>& indices) {
    if (indices.size() != static_cast<std::size_t>(cb.V())) throw std::invalid_argument("superimpose: expected V indices");
    CVec s = CVec::Zero(cb.half_length());
    for (int v = 0; v < cb.V(); ++v) {
        const int m = indices[static_cast<std::size_t>(v)];
        if (m < 0 || m >= cb.M()) throw std::invalid_argument("superimpose: index out of range");
        s += cb.slice(v).col(m);
    }
    return s;
}

EncodedPacket encode(const BitString& msg, const Codebook& cb, const PacketLayout& layout) {
    layout.validate();
    if (layout.V != cb.V() || layout.M() != cb.M()) throw std::invalid_argument("encode: layout does not match codebook");
    if (msg.size() != static_cast<std::size_t>(layout.info_bits))
        throw std::invalid_argument("encode: message length != layout.info_bits");
    EncodedPacket p;
    p.frame = crc::crc_append(msg);
    p.indices = frame_to_indices(p.frame, layout);
    p.s = superimpose(cb, p.indices);
    return p;
}

CMat reshape_space_time(const CVec& s, int nt, int mc) {
    if (nt < 1 || mc < 1 || static_cast<Eigen::Index>(nt) * mc != s.size())
        throw std::invalid_argument("reshape_space_time: nt*mc != length of s");
    return Eigen::Map<const CMat>(s.data(), nt, mc);
}

CVec vectorize(const CMat& S) { return Eigen::Map<const CVec>(S.data(), S.size()); }

}  // namespace nos
