#pragma once

#include <complex>
#include <cstdint>
#include <initializer_list>
#include <random>
#include <span>
#include <vector>

#include <Eigen/Dense>

namespace nos {

using cplx = std::complex<double>;
using CVec = Eigen::VectorXcd;
using CMat = Eigen::MatrixXcd;
using RVec = Eigen::VectorXd;

/// Ordered sequence of bits. Every element is 0 or 1 and the sequence is
/// never empty once constructed through the checked constructors.
class BitString {
public:
    BitString() = default;
    explicit BitString(std::vector<std::uint8_t> bits);
    BitString(std::initializer_list<int> bits);

    static BitString zeros(std::size_t n);

    std::size_t size() const noexcept { return bits_.size(); }
    bool empty() const noexcept { return bits_.empty(); }
    std::uint8_t operator[](std::size_t i) const { return bits_[i]; }
    void set(std::size_t i, std::uint8_t b);
    void flip(std::size_t i) { bits_[i] ^= 1u; }

    std::span<const std::uint8_t> bits() const noexcept { return bits_; }
    BitString slice(std::size_t pos, std::size_t len) const;
    BitString concat(const BitString& tail) const;

    /// Number of positions where the two strings differ; lengths must match.
    std::size_t hamming(const BitString& other) const;

    friend bool operator==(const BitString&, const BitString&) = default;

private:
    std::vector<std::uint8_t> bits_;
};

/// Deterministic pseudo-random source. Identical seeds give identical draw
/// sequences on every platform: the engine is mt19937_64 and the normal
/// transform is done here rather than by the standard library.
class SeededRng {
public:
    explicit SeededRng(std::uint64_t seed);

    /// Independent substream for (master seed, stream id).
    static SeededRng derive(std::uint64_t master, std::uint64_t stream);

    std::uint64_t seed() const noexcept { return seed_; }
    std::uint64_t next_u64() { return engine_(); }
    /// Uniform on [0, 1) with 53 random bits.
    double uniform();
    double normal();
    std::uint8_t bit() { return static_cast<std::uint8_t>(engine_() >> 63); }

private:
    std::uint64_t seed_;
    std::mt19937_64 engine_;
    bool has_spare_ = false;
    double spare_ = 0.0;
};

std::uint64_t splitmix64(std::uint64_t x);

/// rows x cols matrix of i.i.d. circular complex Gaussians with element-wise
/// variance var (real and imaginary parts each var/2). Filled column-major.
CMat complex_gaussian(SeededRng& rng, int rows, int cols, double var);

BitString random_bits(SeededRng& rng, std::size_t n);

/// Big-endian: the first bit is the most significant.
std::uint32_t bits_to_index(const BitString& b);
BitString index_to_bits(std::uint32_t index, int m);

/// [Re(z); Im(z)]
RVec realify(const CVec& z);
/// Inverse of realify; x.size() must be even.
CVec complexify(const RVec& x);

bool is_power_of_two(std::uint64_t x) noexcept;
int log2_exact(std::uint64_t x);

}  // namespace nos
