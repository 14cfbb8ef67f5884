#include "oracles.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>
#include <utility>

namespace nos::oracle {

std::vector<int> crc11_long_division(const std::vector<int>& msg) {
    // x^11 + x^10 + x^9 + x^5 + 1, highest power first
    const std::vector<int> g = {1, 1, 1, 0, 0, 0, 1, 0, 0, 0, 0, 1};
    std::vector<int> work = msg;
    work.resize(msg.size() + 11, 0);
    for (std::size_t i = 0; i < msg.size(); ++i) {
        if (work[i] == 0) continue;
        for (std::size_t j = 0; j < g.size(); ++j) work[i + j] ^= g[j];
    }
    return std::vector<int>(work.end() - 11, work.end());
}

unsigned big_endian_value(const std::vector<int>& bits) {
    unsigned v = 0;
    unsigned weight = 1;
    for (auto it = bits.rbegin(); it != bits.rend(); ++it) {
        v += weight * static_cast<unsigned>(*it);
        weight *= 2;
    }
    return v;
}

CMat reshape_loops(const CVec& s, int nt, int mc) {
    CMat S(nt, mc);
    for (int a = 0; a < nt; ++a)
        for (int t = 0; t < mc; ++t) S(a, t) = s(t * nt + a);
    return S;
}

std::vector<CMat> post_channel_loops(const Codebook& cb, const CMat& H, int nt, int mc) {
    const int nr = static_cast<int>(H.rows());
    std::vector<CMat> out;
    for (int v = 0; v < cb.V(); ++v) {
        CMat w = CMat::Zero(nr * mc, cb.M());
        for (int m = 0; m < cb.M(); ++m) {
            for (int t = 0; t < mc; ++t) {
                for (int r = 0; r < nr; ++r) {
                    cplx acc(0.0, 0.0);
                    for (int a = 0; a < nt; ++a) acc += H(r, a) * cb.slice(v)(t * nt + a, m);
                    w(t * nr + r, m) = acc;
                }
            }
        }
        out.push_back(w);
    }
    return out;
}

std::vector<int> brute_force_ml(const CVec& y, const std::vector<CMat>& slices) {
    const int V = static_cast<int>(slices.size());
    const int M = static_cast<int>(slices.front().cols());
    std::vector<int> idx(static_cast<std::size_t>(V), 0), best;
    double best_d = std::numeric_limits<double>::infinity();
    while (true) {
        CVec u = CVec::Zero(y.size());
        for (int v = 0; v < V; ++v) u += slices[static_cast<std::size_t>(v)].col(idx[static_cast<std::size_t>(v)]);
        const double d = (y - u).squaredNorm();
        if (d < best_d) {
            best_d = d;
            best = idx;
        }
        int v = V - 1;
        while (v >= 0 && ++idx[static_cast<std::size_t>(v)] == M) idx[static_cast<std::size_t>(v--)] = 0;
        if (v < 0) break;
    }
    return best;
}

CMat mmse_gauss(const CMat& Y, const CMat& H, double sigma2, double P) {
    const int n = static_cast<int>(H.cols());
    const int k = static_cast<int>(Y.cols());
    const int r = static_cast<int>(H.rows());
    // Augmented [A | B] with A = H'H + (sigma2/P) I, B = H'Y.
    std::vector<std::vector<cplx>> a(static_cast<std::size_t>(n), std::vector<cplx>(static_cast<std::size_t>(n + k)));
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < n; ++j) {
            cplx acc(0.0, 0.0);
            for (int q = 0; q < r; ++q) acc += std::conj(H(q, i)) * H(q, j);
            a[i][j] = acc + (i == j ? cplx(sigma2 / P, 0.0) : cplx(0.0, 0.0));
        }
        for (int j = 0; j < k; ++j) {
            cplx acc(0.0, 0.0);
            for (int q = 0; q < r; ++q) acc += std::conj(H(q, i)) * Y(q, j);
            a[i][n + j] = acc;
        }
    }
    for (int col = 0; col < n; ++col) {
        int piv = col;
        for (int i = col + 1; i < n; ++i)
            if (std::abs(a[i][col]) > std::abs(a[piv][col])) piv = i;
        std::swap(a[col], a[piv]);
        if (std::abs(a[col][col]) == 0.0) throw std::runtime_error("mmse_gauss: singular");
        for (int i = 0; i < n; ++i) {
            if (i == col) continue;
            const cplx f = a[i][col] / a[col][col];
            for (int j = col; j < n + k; ++j) a[i][j] -= f * a[col][j];
        }
    }
    CMat X(n, k);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < k; ++j) X(i, j) = a[i][n + j] / a[i][i];
    return X;
}

std::vector<double> forward_reference(const std::vector<nn::Layer>& layers, const std::vector<double>& x) {
    std::vector<double> h = x;
    for (const auto& l : layers) {
        const auto& p = l.params;
        switch (l.kind) {
            case nn::LayerKind::linear: {
                std::vector<double> o(static_cast<std::size_t>(l.out_dim));
                for (int i = 0; i < l.out_dim; ++i) {
                    double acc = p[static_cast<std::size_t>(l.out_dim * l.in_dim + i)];
                    for (int j = 0; j < l.in_dim; ++j) acc += p[static_cast<std::size_t>(i * l.in_dim + j)] * h[static_cast<std::size_t>(j)];
                    o[static_cast<std::size_t>(i)] = acc;
                }
                h = o;
                break;
            }
            case nn::LayerKind::batch_norm: {
                const std::size_t n = h.size();
                for (std::size_t i = 0; i < n; ++i)
                    h[i] = p[i] * (h[i] - p[2 * n + i]) / std::sqrt(p[3 * n + i] + p[4 * n]) + p[n + i];
                break;
            }
            case nn::LayerKind::activation:
                for (double& v : h) {
                    switch (l.act) {
                        case nn::Activation::none: break;
                        case nn::Activation::relu: v = v > 0 ? v : 0.0; break;
                        case nn::Activation::tanh: v = std::tanh(v); break;
                        case nn::Activation::sigmoid: v = 1.0 / (1.0 + std::exp(-v)); break;
                        case nn::Activation::leaky_relu: v = v > 0 ? v : 0.01 * v; break;
                    }
                }
                break;
            case nn::LayerKind::softmax: {
                double z = 0.0;
                for (double v : h) z += std::exp(v);
                for (double& v : h) v = std::exp(v) / z;
                break;
            }
            case nn::LayerKind::power_norm: {
                double e = 0.0;
                for (double v : h) e += v * v;
                for (double& v : h) v *= std::sqrt(p[0] / e);
                break;
            }
        }
    }
    return h;
}

std::vector<int> polar_generator_encode(const std::vector<int>& u) {
    const std::size_t N = u.size();
    std::vector<std::vector<int>> G = {{1}};
    while (G.size() < N) {
        const std::size_t n = G.size();
        std::vector<std::vector<int>> K(2 * n, std::vector<int>(2 * n, 0));
        // kron(F, G) with F = [1 0; 1 1]
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = 0; j < n; ++j) {
                K[i][j] = G[i][j];
                K[n + i][j] = G[i][j];
                K[n + i][n + j] = G[i][j];
            }
        G = K;
    }
    if (G.size() != N) throw std::invalid_argument("polar_generator_encode: length must be a power of two");
    std::vector<int> x(N, 0);
    for (std::size_t j = 0; j < N; ++j)
        for (std::size_t i = 0; i < N; ++i) x[j] ^= u[i] & G[i][j];
    return x;
}

std::vector<int> polar_exhaustive_ml(const std::vector<double>& llrs, const std::vector<int>& info_positions, int mother_n) {
    const std::size_t k = info_positions.size();
    std::vector<int> best;
    double best_ll = -std::numeric_limits<double>::infinity();
    for (unsigned w = 0; w < (1u << k); ++w) {
        std::vector<int> frame(k);
        for (std::size_t i = 0; i < k; ++i) frame[i] = static_cast<int>((w >> (k - 1 - i)) & 1u);
        std::vector<int> u(static_cast<std::size_t>(mother_n), 0);
        for (std::size_t i = 0; i < k; ++i) u[static_cast<std::size_t>(info_positions[i])] = frame[i];
        const auto x = polar_generator_encode(u);
        double ll = 0.0;
        for (std::size_t j = 0; j < llrs.size(); ++j) {
            // P(x=0) = 1/(1+e^-L), P(x=1) = 1/(1+e^L)
            const double L = llrs[j];
            ll += x[j] == 0 ? -std::log1p(std::exp(-L)) : -std::log1p(std::exp(L));
        }
        for (std::size_t j = llrs.size(); j < x.size(); ++j)
            if (x[j] != 0) ll = -std::numeric_limits<double>::infinity();
        if (ll > best_ll) {
            best_ll = ll;
            best = frame;
        }
    }
    return best;
}

std::vector<double> mimo_llr_naive(const CVec& y, const CMat& H, double sigma2) {
    const int nt = static_cast<int>(H.cols());
    const double s = 1.0 / std::sqrt(2.0);
    const int nbits = 2 * nt;
    std::vector<double> num(static_cast<std::size_t>(nbits), 0.0), den(static_cast<std::size_t>(nbits), 0.0);
    for (int w = 0; w < (1 << nbits); ++w) {
        std::vector<int> b(static_cast<std::size_t>(nbits));
        for (int i = 0; i < nbits; ++i) b[static_cast<std::size_t>(i)] = (w >> i) & 1;
        CVec x(nt);
        for (int a = 0; a < nt; ++a)
            x(a) = cplx(s * (1 - 2 * b[static_cast<std::size_t>(2 * a)]), s * (1 - 2 * b[static_cast<std::size_t>(2 * a + 1)]));
        double d = 0.0;
        for (int r = 0; r < y.size(); ++r) {
            cplx e = y(r);
            for (int a = 0; a < nt; ++a) e -= H(r, a) * x(a);
            d += std::norm(e);
        }
        const double lik = std::exp(-d / sigma2);
        for (int i = 0; i < nbits; ++i) (b[static_cast<std::size_t>(i)] == 0 ? num : den)[static_cast<std::size_t>(i)] += lik;
    }
    std::vector<double> out(static_cast<std::size_t>(nbits));
    for (int i = 0; i < nbits; ++i) out[static_cast<std::size_t>(i)] = std::log(num[static_cast<std::size_t>(i)]) - std::log(den[static_cast<std::size_t>(i)]);
    return out;
}

}  // namespace nos::oracle
