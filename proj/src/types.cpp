#include "nos/types.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

namespace nos {

BitString::BitString(std::vector<std::uint8_t> bits) : bits_(std::move(bits)) {
    if (bits_.empty()) throw std::invalid_argument("BitString: empty bit sequence");
    for (auto b : bits_)
        if (b > 1) throw std::invalid_argument("BitString: element outside {0,1}");
}

BitString::BitString(std::initializer_list<int> bits) {
    bits_.reserve(bits.size());
    for (int b : bits) {
        if (b != 0 && b != 1) throw std::invalid_argument("BitString: element outside {0,1}");
        bits_.push_back(static_cast<std::uint8_t>(b));
    }
    if (bits_.empty()) throw std::invalid_argument("BitString: empty bit sequence");
}

BitString BitString::zeros(std::size_t n) { return BitString(std::vector<std::uint8_t>(n, 0)); }

void BitString::set(std::size_t i, std::uint8_t b) {
    if (b > 1) throw std::invalid_argument("BitString: element outside {0,1}");
    bits_.at(i) = b;
}

BitString BitString::slice(std::size_t pos, std::size_t len) const {
    if (pos + len > bits_.size()) throw std::out_of_range("BitString::slice");
    return BitString(std::vector<std::uint8_t>(bits_.begin() + static_cast<std::ptrdiff_t>(pos),
                                               bits_.begin() + static_cast<std::ptrdiff_t>(pos + len)));
}

BitString BitString::concat(const BitString& tail) const {
    std::vector<std::uint8_t> out(bits_);
    out.insert(out.end(), tail.bits_.begin(), tail.bits_.end());
    return BitString(std::move(out));
}

std::size_t BitString::hamming(const BitString& other) const {
    if (other.size() != size()) throw std::invalid_argument("BitString::hamming: length mismatch");
    std::size_t d = 0;
    for (std::size_t i = 0; i < bits_.size(); ++i) d += bits_[i] != other.bits_[i];
    return d;
}

std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

SeededRng::SeededRng(std::uint64_t seed) : seed_(seed), engine_(seed) {}

SeededRng SeededRng::derive(std::uint64_t master, std::uint64_t stream) {
    return SeededRng(splitmix64(splitmix64(master) ^ splitmix64(stream + 0x632be59bd9b4e019ULL)));
}

double SeededRng::uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

double SeededRng::normal() {
    if (has_spare_) {
        has_spare_ = false;
        return spare_;
    }
    // Box-Muller; 1 - uniform() lies in (0, 1] so the log is finite.
    const double r = std::sqrt(-2.0 * std::log(1.0 - uniform()));
    const double theta = 2.0 * std::numbers::pi * uniform();
    spare_ = r * std::sin(theta);
    has_spare_ = true;
    return r * std::cos(theta);
}

CMat complex_gaussian(SeededRng& rng, int rows, int cols, double var) {
    if (!(var > 0.0)) throw std::invalid_argument("complex_gaussian: variance must be positive");
    if (rows < 0 || cols < 0) throw std::invalid_argument("complex_gaussian: negative shape");
    const double sd = std::sqrt(var / 2.0);
    CMat out(rows, cols);
    for (int c = 0; c < cols; ++c)
        for (int r = 0; r < rows; ++r) {
            const double re = rng.normal();
            const double im = rng.normal();
            out(r, c) = cplx(sd * re, sd * im);
        }
    return out;
}

BitString random_bits(SeededRng& rng, std::size_t n) {
    std::vector<std::uint8_t> b(n);
    for (auto& x : b) x = rng.bit();
    return BitString(std::move(b));
}

std::uint32_t bits_to_index(const BitString& b) {
    if (b.empty()) throw std::invalid_argument("bits_to_index: empty input");
    if (b.size() > 31) throw std::invalid_argument("bits_to_index: more than 31 bits");
    std::uint32_t idx = 0;
    for (auto bit : b.bits()) idx = (idx << 1) | bit;
    return idx;
}

BitString index_to_bits(std::uint32_t index, int m) {
    if (m <= 0 || m > 31) throw std::invalid_argument("index_to_bits: bad width");
    if (index >> m) throw std::invalid_argument("index_to_bits: index does not fit in " + std::to_string(m) + " bits");
    std::vector<std::uint8_t> out(static_cast<std::size_t>(m));
    for (int i = 0; i < m; ++i) out[static_cast<std::size_t>(i)] = (index >> (m - 1 - i)) & 1u;
    return BitString(std::move(out));
}

RVec realify(const CVec& z) {
    RVec x(2 * z.size());
    x.head(z.size()) = z.real();
    x.tail(z.size()) = z.imag();
    return x;
}

CVec complexify(const RVec& x) {
    if (x.size() % 2 != 0) throw std::invalid_argument("complexify: odd length");
    const auto n = x.size() / 2;
    CVec z(n);
    for (Eigen::Index i = 0; i < n; ++i) z(i) = cplx(x(i), x(n + i));
    return z;
}

bool is_power_of_two(std::uint64_t x) noexcept { return x != 0 && (x & (x - 1)) == 0; }

int log2_exact(std::uint64_t x) {
    if (!is_power_of_two(x)) throw std::invalid_argument("log2_exact: not a power of two");
    int k = 0;
    while ((x >> k) != 1) ++k;
    return k;
}

}  // namespace nos
