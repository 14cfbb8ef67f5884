#include "designer.hpp"

#include <cmath>

namespace nos::testing {

namespace {

// Real view: column j = v*M + m holds [Re; Im] of C[v,:,m].
Eigen::MatrixXd to_real(const Codebook& cb) {
    const int half = cb.half_length();
    Eigen::MatrixXd X(2 * half, cb.V() * cb.M());
    for (int v = 0; v < cb.V(); ++v)
        for (int m = 0; m < cb.M(); ++m) X.col(v * cb.M() + m) = realify(cb.slice(v).col(m));
    return X;
}

Codebook from_real(const Eigen::MatrixXd& X, int V, int D, int M) {
    std::vector<CMat> slices;
    for (int v = 0; v < V; ++v) {
        CMat s(D / 2, M);
        for (int m = 0; m < M; ++m) s.col(m) = complexify(X.col(v * M + m));
        slices.push_back(std::move(s));
    }
    return Codebook(V, D, M, std::move(slices));
}

void normalize_columns(Eigen::MatrixXd& X, double energy) {
    for (Eigen::Index j = 0; j < X.cols(); ++j) X.col(j) *= std::sqrt(energy) / X.col(j).norm();
}

}  // namespace

Codebook random_codebook(int V, int D, int M, std::uint64_t seed) {
    SeededRng rng(seed);
    Eigen::MatrixXd X(D, V * M);
    for (Eigen::Index j = 0; j < X.cols(); ++j)
        for (Eigen::Index i = 0; i < X.rows(); ++i) X(i, j) = rng.normal();
    normalize_columns(X, static_cast<double>(D) / (2.0 * V));
    return from_real(X, V, D, M);
}

Codebook design_codebook(const DesignOptions& opt) {
    const int V = opt.V, M = opt.M, D = opt.D;
    const double E = static_cast<double>(D) / (2.0 * V);
    Eigen::MatrixXd X = to_real(random_codebook(V, D, M, opt.seed));
    const Eigen::Index N = X.cols();
    const double p = opt.inter_power;

    for (int step = 0; step < opt.steps; ++step) {
        const Eigen::MatrixXd rho = (X.transpose() * X) / E;
        Eigen::MatrixXd dL = Eigen::MatrixXd::Zero(N, N);
        for (Eigen::Index j = 0; j < N; ++j) {
            for (Eigen::Index i = 0; i < N; ++i) {
                if (i == j) continue;
                const double r = rho(i, j);
                if (i / M != j / M) {
                    dL(i, j) = p * std::pow(std::abs(r), p - 1.0) * (r < 0 ? -1.0 : 1.0);
                } else if (r > 0.0) {
                    dL(i, j) = opt.intra_weight * opt.intra_power * std::pow(r, opt.intra_power - 1.0);
                }
            }
        }
        Eigen::MatrixXd G = X * (dL + dL.transpose()) / E;
        // Tangent projection, then a fixed-length step per codeword.
        for (Eigen::Index j = 0; j < N; ++j) {
            const auto x = X.col(j);
            Eigen::VectorXd g = G.col(j) - x * (x.dot(G.col(j)) / E);
            const double gn = g.norm();
            if (gn > 0.0) X.col(j) -= opt.step_size * std::sqrt(E) * g / gn;
        }
        normalize_columns(X, E);
    }
    return from_real(X, V, D, M);
}

}  // namespace nos::testing
