#include "nos/polar.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

#include "nos/crc.hpp"
#include "nos/encoder.hpp"

namespace nos::polar {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double sgn(double x) { return x < 0.0 ? -1.0 : 1.0; }

// Exact boxplus 2 atanh(tanh(a/2) tanh(b/2)).
double f_op(double a, double b) {
    if (std::isinf(a) && std::isinf(b)) return sgn(a) * sgn(b) * kInf;
    if (std::isinf(a)) return sgn(a) * b;
    if (std::isinf(b)) return sgn(b) * a;
    const double m = std::min(std::abs(a), std::abs(b));
    return sgn(a) * sgn(b) * m + std::log1p(std::exp(-std::abs(a + b))) - std::log1p(std::exp(-std::abs(a - b)));
}

// Opposing infinite beliefs (only on paths already ruled out) give 0.
double g_op(double a, double b, std::uint8_t v) {
    const double r = v ? b - a : b + a;
    return std::isnan(r) ? 0.0 : r;
}

// -log P(bit | llr) = log(1 + exp(-(1 - 2 bit) llr))
double bit_penalty(double llr, std::uint8_t bit) {
    const double x = bit ? -llr : llr;
    if (x == kInf) return 0.0;
    if (x == -kInf) return kInf;
    return x > 0.0 ? std::log1p(std::exp(-x)) : -x + std::log1p(std::exp(x));
}

struct Path {
    std::vector<std::vector<double>> L;        // L[s] has 2^s entries
    std::vector<std::vector<std::uint8_t>> B;  // left-sibling codeword per stage
    std::vector<std::uint8_t> u;
    double pm = 0.0;
};

void update_llrs(Path& p, int i, int n) {
    const int start = i == 0 ? n : std::countr_zero(static_cast<unsigned>(i)) + 1;
    for (int s = start; s >= 1; --s) {
        const int h = 1 << (s - 1);
        const auto& up = p.L[static_cast<std::size_t>(s)];
        auto& down = p.L[static_cast<std::size_t>(s - 1)];
        if ((i >> (s - 1)) & 1) {
            const auto& left = p.B[static_cast<std::size_t>(s - 1)];
            for (int j = 0; j < h; ++j) down[j] = g_op(up[j], up[j + h], left[j]);
        } else {
            for (int j = 0; j < h; ++j) down[j] = f_op(up[j], up[j + h]);
        }
    }
}

void push_bit(Path& p, int i, int n, std::uint8_t bit) {
    p.u[static_cast<std::size_t>(i)] = bit;
    std::vector<std::uint8_t> cur{bit};
    for (int s = 0; s < n; ++s) {
        if (((i >> s) & 1) == 0) {
            p.B[static_cast<std::size_t>(s)] = std::move(cur);
            return;
        }
        const auto& left = p.B[static_cast<std::size_t>(s)];
        std::vector<std::uint8_t> next(cur.size() * 2);
        for (std::size_t j = 0; j < cur.size(); ++j) {
            next[j] = left[j] ^ cur[j];
            next[j + cur.size()] = cur[j];
        }
        cur = std::move(next);
    }
}

std::vector<double> extend_llrs(const std::vector<double>& llrs, const PolarSpec& spec) {
    if (llrs.size() != static_cast<std::size_t>(spec.n_coded()))
        throw std::invalid_argument("polar: expected n_coded LLRs");
    for (double x : llrs)
        if (std::isnan(x)) throw std::invalid_argument("polar: NaN LLR");
    std::vector<double> full(static_cast<std::size_t>(spec.mother_n()), kInf);
    std::copy(llrs.begin(), llrs.end(), full.begin());
    return full;
}

BitString extract_frame(const std::vector<std::uint8_t>& u, const PolarSpec& spec) {
    std::vector<std::uint8_t> f;
    f.reserve(spec.info_positions().size());
    for (int pos : spec.info_positions()) f.push_back(u[static_cast<std::size_t>(pos)]);
    return BitString(std::move(f));
}

std::vector<std::uint8_t> sc_node(const std::vector<double>& L, int offset, const std::vector<std::uint8_t>& frozen,
                                  std::vector<std::uint8_t>& u) {
    if (L.size() == 1) {
        const std::uint8_t b = frozen[static_cast<std::size_t>(offset)] ? 0 : (L[0] < 0.0 ? 1 : 0);
        u[static_cast<std::size_t>(offset)] = b;
        return {b};
    }
    const std::size_t h = L.size() / 2;
    std::vector<double> a(h);
    for (std::size_t j = 0; j < h; ++j) a[j] = f_op(L[j], L[j + h]);
    const auto v = sc_node(a, offset, frozen, u);
    for (std::size_t j = 0; j < h; ++j) a[j] = g_op(L[j], L[j + h], v[j]);
    const auto w = sc_node(a, offset + static_cast<int>(h), frozen, u);
    std::vector<std::uint8_t> x(L.size());
    for (std::size_t j = 0; j < h; ++j) {
        x[j] = v[j] ^ w[j];
        x[j + h] = w[j];
    }
    return x;
}

}  // namespace

double polarization_weight(int index) {
    double w = 0.0;
    for (int b = 0; (index >> b) != 0; ++b)
        if ((index >> b) & 1) w += std::pow(2.0, b / 4.0);
    return w;
}

std::vector<int> reliability_order(int n) {
    std::vector<int> idx(static_cast<std::size_t>(n));
    std::iota(idx.begin(), idx.end(), 0);
    std::stable_sort(idx.begin(), idx.end(), [](int a, int b) { return polarization_weight(a) < polarization_weight(b); });
    return idx;
}

PolarSpec::PolarSpec(int n_info, int n_crc, int n_coded, int list_size, int mother_n)
    : n_info_(n_info), n_crc_(n_crc), n_coded_(n_coded), list_size_(list_size), mother_n_(mother_n) {
    if (n_info < 1) throw std::invalid_argument("PolarSpec: n_info must be >= 1");
    if (n_crc != 0 && n_crc != crc::CrcSpec::degree) throw std::invalid_argument("PolarSpec: n_crc must be 0 or 11");
    if (list_size < 1) throw std::invalid_argument("PolarSpec: list size must be >= 1");
    if (mother_n_ == 0) mother_n_ = static_cast<int>(std::bit_ceil(static_cast<unsigned>(std::max(n_coded, 2))));
    if (mother_n_ < 2 || !is_power_of_two(static_cast<std::uint64_t>(mother_n_)))
        throw std::invalid_argument("PolarSpec: mother length must be a power of two >= 2");
    if (n_coded < 1 || n_coded > mother_n_) throw std::invalid_argument("PolarSpec: need 1 <= n_coded <= mother_n");
    if (frame_bits() > n_coded) throw std::invalid_argument("PolarSpec: n_info + n_crc exceeds n_coded");

    frozen_.assign(static_cast<std::size_t>(mother_n_), 1);
    const auto order = reliability_order(mother_n_);
    int picked = 0;
    for (auto it = order.rbegin(); it != order.rend() && picked < frame_bits(); ++it) {
        if (*it >= n_coded) continue;
        frozen_[static_cast<std::size_t>(*it)] = 0;
        ++picked;
    }
    for (int i = 0; i < mother_n_; ++i)
        if (!frozen_[static_cast<std::size_t>(i)]) info_pos_.push_back(i);
}

PolarSpec PolarSpec::with_list_size(int L) const { return PolarSpec(n_info_, n_crc_, n_coded_, L, mother_n_); }

std::vector<std::uint8_t> polar_transform(const std::vector<std::uint8_t>& u) {
    if (!is_power_of_two(u.size())) throw std::invalid_argument("polar_transform: length must be a power of two");
    std::vector<std::uint8_t> x = u;
    for (std::size_t h = 1; h < x.size(); h *= 2)
        for (std::size_t blk = 0; blk < x.size(); blk += 2 * h)
            for (std::size_t j = blk; j < blk + h; ++j) x[j] ^= x[j + h];
    return x;
}

BitString polar_encode(const BitString& frame, const PolarSpec& spec) {
    if (frame.size() != static_cast<std::size_t>(spec.frame_bits()))
        throw std::invalid_argument("polar_encode: frame length != n_info + n_crc");
    std::vector<std::uint8_t> u(static_cast<std::size_t>(spec.mother_n()), 0);
    for (std::size_t k = 0; k < frame.size(); ++k) u[static_cast<std::size_t>(spec.info_positions()[k])] = frame[k];
    auto x = polar_transform(u);
    x.resize(static_cast<std::size_t>(spec.n_coded()));
    return BitString(std::move(x));
}

BitString sc_decode(const std::vector<double>& llrs, const PolarSpec& spec) {
    const auto full = extend_llrs(llrs, spec);
    std::vector<std::uint8_t> u(full.size(), 0);
    sc_node(full, 0, spec.frozen_mask(), u);
    return extract_frame(u, spec);
}

PolarDecodeResult scl_decode(const std::vector<double>& llrs, const PolarSpec& spec, bool use_crc) {
    const auto full = extend_llrs(llrs, spec);
    const int N = spec.mother_n();
    const int n = log2_exact(static_cast<std::uint64_t>(N));
    const auto Lmax = static_cast<std::size_t>(spec.list_size());
    const auto& frozen = spec.frozen_mask();

    Path root;
    root.L.resize(static_cast<std::size_t>(n) + 1);
    root.B.resize(static_cast<std::size_t>(n));
    for (int s = 0; s <= n; ++s) root.L[static_cast<std::size_t>(s)].assign(std::size_t{1} << s, 0.0);
    for (int s = 0; s < n; ++s) root.B[static_cast<std::size_t>(s)].assign(std::size_t{1} << s, 0);
    root.L[static_cast<std::size_t>(n)] = full;
    root.u.assign(static_cast<std::size_t>(N), 0);
    std::vector<Path> paths{std::move(root)};

    struct Fork {
        double pm;
        std::size_t parent;
        std::uint8_t bit;
    };

    for (int i = 0; i < N; ++i) {
        for (auto& p : paths) update_llrs(p, i, n);
        if (frozen[static_cast<std::size_t>(i)]) {
            for (auto& p : paths) {
                p.pm += bit_penalty(p.L[0][0], 0);
                push_bit(p, i, n, 0);
            }
            continue;
        }
        std::vector<Fork> forks;
        forks.reserve(2 * paths.size());
        for (std::size_t k = 0; k < paths.size(); ++k) {
            const double llr = paths[k].L[0][0];
            forks.push_back({paths[k].pm + bit_penalty(llr, 0), k, 0});
            forks.push_back({paths[k].pm + bit_penalty(llr, 1), k, 1});
        }
        const std::size_t keep = std::min(Lmax, forks.size());
        std::partial_sort(forks.begin(), forks.begin() + static_cast<std::ptrdiff_t>(keep), forks.end(),
                          [](const Fork& a, const Fork& b) {
                              if (a.pm != b.pm) return a.pm < b.pm;
                              if (a.parent != b.parent) return a.parent < b.parent;
                              return a.bit < b.bit;
                          });
        std::vector<Path> next;
        next.reserve(keep);
        for (std::size_t k = 0; k < keep; ++k) {
            Path p = paths[forks[k].parent];
            p.pm = forks[k].pm;
            push_bit(p, i, n, forks[k].bit);
            next.push_back(std::move(p));
        }
        paths = std::move(next);
    }

    PolarDecodeResult r;
    r.candidates.reserve(paths.size());
    for (const auto& p : paths) r.candidates.push_back({extract_frame(p.u, spec), p.pm});
    std::stable_sort(r.candidates.begin(), r.candidates.end(),
                     [](const PolarCandidate& a, const PolarCandidate& b) { return a.metric < b.metric; });
    if (!use_crc || spec.n_crc() == 0) {
        r.frame = r.candidates.front().frame;
        r.crc_pass = spec.n_crc() > 0 && crc::crc_check(*r.frame);
        return r;
    }
    for (const auto& c : r.candidates) {
        if (crc::crc_check(c.frame)) {
            r.frame = c.frame;
            r.crc_pass = true;
            break;
        }
    }
    return r;
}

CVec qpsk_map(const BitString& bits) {
    if (bits.size() % 2 != 0) throw std::invalid_argument("qpsk_map: bit count must be even");
    const double a = 1.0 / std::sqrt(2.0);
    CVec out(static_cast<Eigen::Index>(bits.size() / 2));
    for (Eigen::Index k = 0; k < out.size(); ++k) {
        const auto b0 = bits[static_cast<std::size_t>(2 * k)];
        const auto b1 = bits[static_cast<std::size_t>(2 * k + 1)];
        out(k) = cplx(a * (1.0 - 2.0 * b0), a * (1.0 - 2.0 * b1));
    }
    return out;
}

std::vector<double> ml_mimo_llr(const CVec& y, const CMat& H, double sigma2) {
    const auto nt = static_cast<int>(H.cols());
    if (y.size() != H.rows()) throw std::invalid_argument("ml_mimo_llr: y length != rows of H");
    if (nt < 1 || nt > 6) throw std::invalid_argument("ml_mimo_llr: need 1 <= nt <= 6");
    if (sigma2 < 0.0) throw std::invalid_argument("ml_mimo_llr: negative noise variance");
    const int nbits = 2 * nt;
    const int count = 1 << nbits;
    const double a = 1.0 / std::sqrt(2.0);

    std::vector<double> metric(static_cast<std::size_t>(count));
    CVec x(nt);
    for (int idx = 0; idx < count; ++idx) {
        for (int ant = 0; ant < nt; ++ant) {
            const int b0 = (idx >> (nbits - 1 - 2 * ant)) & 1;
            const int b1 = (idx >> (nbits - 2 - 2 * ant)) & 1;
            x(ant) = cplx(a * (1 - 2 * b0), a * (1 - 2 * b1));
        }
        metric[static_cast<std::size_t>(idx)] = (y - H * x).squaredNorm();
    }

    std::vector<double> llr(static_cast<std::size_t>(nbits));
    for (int k = 0; k < nbits; ++k) {
        const int shift = nbits - 1 - k;
        double best[2] = {kInf, kInf};
        for (int idx = 0; idx < count; ++idx) {
            const int b = (idx >> shift) & 1;
            best[b] = std::min(best[b], metric[static_cast<std::size_t>(idx)]);
        }
        if (sigma2 == 0.0) {
            llr[static_cast<std::size_t>(k)] = best[0] < best[1] ? kInf : (best[1] < best[0] ? -kInf : 0.0);
            continue;
        }
        double sum[2] = {0.0, 0.0};
        for (int idx = 0; idx < count; ++idx) {
            const int b = (idx >> shift) & 1;
            sum[b] += std::exp(-(metric[static_cast<std::size_t>(idx)] - best[b]) / sigma2);
        }
        llr[static_cast<std::size_t>(k)] = (best[1] - best[0]) / sigma2 + std::log(sum[0]) - std::log(sum[1]);
    }
    return llr;
}

PipelineOutcome qpsk_pipeline(const BitString& msg, const ChannelRealization& ch, const SnrPoint& snr, SeededRng& rng,
                              const PolarSpec& spec, bool also_plain) {
    if (msg.size() != static_cast<std::size_t>(spec.n_info())) throw std::invalid_argument("qpsk_pipeline: message length != n_info");
    const int nt = ch.nt();
    if (spec.n_coded() % (2 * nt) != 0) throw std::invalid_argument("qpsk_pipeline: n_coded must be a multiple of 2*nt");
    const int mc = spec.n_coded() / (2 * nt);

    PipelineOutcome out;
    out.frame = spec.n_crc() > 0 ? crc::crc_append(msg) : msg;
    const BitString coded = polar_encode(out.frame, spec);
    const CMat S = reshape_space_time(qpsk_map(coded), nt, mc);
    const CMat Y = transmit(S, ch, snr, rng);

    std::vector<double> llrs;
    llrs.reserve(static_cast<std::size_t>(spec.n_coded()));
    for (int t = 0; t < mc; ++t) {
        const auto col = ml_mimo_llr(Y.col(t), ch.H, snr.sigma2);
        llrs.insert(llrs.end(), col.begin(), col.end());
    }
    out.ca = scl_decode(llrs, spec, true);
    if (also_plain) {
        PolarDecodeResult plain = out.ca;
        plain.frame = plain.candidates.front().frame;
        plain.crc_pass = spec.n_crc() > 0 && crc::crc_check(*plain.frame);
        out.plain = std::move(plain);
    }
    return out;
}

}  // namespace nos::polar
