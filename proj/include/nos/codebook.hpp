#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <stdexcept>
#include <string>
#include <vector>

#include "nos/types.hpp"

namespace nos {

namespace nn {
struct EncoderWeights;
}

/// Learned superposition codebook: V slices of shape (D/2, M); column m of
/// slice v is the complex codeword C[v,:,m]. Construction checks shapes only;
/// the per-codeword energy D/2V is checked by validate() and on load.
class Codebook {
public:
    Codebook(int V, int D, int M);
    Codebook(int V, int D, int M, std::vector<CMat> slices);

    int V() const noexcept { return V_; }
    int D() const noexcept { return D_; }
    int M() const noexcept { return M_; }
    int half_length() const noexcept { return D_ / 2; }
    /// D / 2V
    double codeword_energy() const noexcept { return static_cast<double>(D_) / (2.0 * V_); }

    const CMat& slice(int v) const { return slices_.at(static_cast<std::size_t>(v)); }
    CMat& slice(int v) { return slices_.at(static_cast<std::size_t>(v)); }
    CVec word(int v, int m) const { return slice(v).col(m); }

    /// max over (v,m) of | ||C[v,:,m]||^2 - D/2V | / (D/2V)
    double max_energy_deviation() const;
    /// Throws CodebookError(energy_violation) beyond rel_tol.
    void validate(double rel_tol = 1e-5) const;

    /// Copy with every entry rounded to single precision.
    Codebook rounded_to_float() const;

    friend bool operator==(const Codebook& a, const Codebook& b);

private:
    int V_, D_, M_;
    std::vector<CMat> slices_;
};

class CodebookError : public std::runtime_error {
public:
    enum class Kind { io, bad_magic, unsupported_version, shape_mismatch, energy_violation };
    CodebookError(Kind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
    Kind kind() const noexcept { return kind_; }

private:
    Kind kind_;
};

/// File layout (little-endian): "NOSC", u16 version, u16 V, u32 M, u32 D,
/// then V*(D/2)*M f32 real parts and the same count of imaginary parts, both in
/// (v, d, m) row-major order.
void save_codebook(const Codebook& cb, const std::filesystem::path& path);
Codebook load_codebook(const std::filesystem::path& path);

/// C[v,:,m] = Complex(Enc_v(onehot(m))) with output normalized to D/2V.
Codebook enumerate_codebook(const nn::EncoderWeights& weights, int V, int D, int M);

/// Codebook seen through one channel realization:
/// words_h[v][:, m] = vec(H * reshape(C[v,:,m])).
class PostChannelCodebook {
public:
    int V() const noexcept { return static_cast<int>(slices_.size()); }
    int M() const noexcept { return M_; }
    /// nr * mc
    int length() const noexcept { return L_; }
    int nt() const noexcept { return nt_; }
    int nr() const noexcept { return nr_; }
    int mc() const noexcept { return mc_; }
    int D() const noexcept { return D_; }

    const CMat& slice(int v) const { return slices_.at(static_cast<std::size_t>(v)); }
    CVec word(int v, int m) const { return slice(v).col(m); }
    /// ||words_h[v][:, m]||^2
    double norm2(int v, int m) const { return norms_(v, m); }
    const Eigen::MatrixXd& norms() const noexcept { return norms_; }

    static PostChannelCodebook from_slices(std::vector<CMat> slices, int nt, int nr, int mc, int D);

private:
    std::vector<CMat> slices_;
    Eigen::MatrixXd norms_;  // V x M
    int M_ = 0, L_ = 0, nt_ = 0, nr_ = 0, mc_ = 0, D_ = 0;
};

PostChannelCodebook apply_channel_to_codebook(const Codebook& cb, const CMat& H, int nt, int mc);

/// Histogram over [-40, +5] dB in 0.5 dB bins. Values outside the range are
/// clamped into the first/last bin; zero counts as -inf and lands in bin 0.
struct DbHistogram {
    static constexpr double lo_db = -40.0;
    static constexpr double hi_db = 5.0;
    static constexpr double bin_db = 0.5;
    static constexpr int bins = 90;

    std::array<std::uint64_t, bins> counts{};
    std::uint64_t total = 0;

    void add(double linear_value);
    void merge(const DbHistogram& other);
    static double bin_low(int i) { return lo_db + bin_db * i; }
};

struct CorrelationSummary {
    DbHistogram hist;
    std::uint64_t samples = 0;  // entries summarized
    double max = 0.0;           // linear, normalized
    double max_db() const;
};

struct CorrelationReport {
    double normalizer = 0.0;
    CorrelationSummary inter;  // |Re<c_i,k , c_j,l>| / normalizer, i != j
    CorrelationSummary intra;  // Re<c_i,k , c_i,l> / normalizer, k != l, positive entries only
    std::uint64_t intra_total = 0;  // all intra entries, positive or not
    double min_intra = 0.0;         // most negative intra entry
    double mean_energy = 0.0;       // mean ||codeword||^2 (not normalized)
    std::uint64_t realizations = 1;

    void merge(const CorrelationReport& other);
};

CorrelationReport correlation_report(const Codebook& cb, double normalizer);
CorrelationReport correlation_report(const PostChannelCodebook& pccb, double normalizer);

/// Aggregates the post-channel report over n_channels independent nr x nt
/// channel draws, normalizer nr * D/2V.
CorrelationReport empirical_post_channel_report(const Codebook& cb, int n_channels, int nt, int nr, SeededRng& rng);

/// Columns: bin_low_db, bin_high_db, count.
void write_histogram_csv(const DbHistogram& h, std::ostream& os);

}  // namespace nos
