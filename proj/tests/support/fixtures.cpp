#include "fixtures.hpp"

#include "designer.hpp"

namespace nos::testing {

Codebook desk_codebook() {
    DesignOptions o;
    o.V = 4;
    o.M = 64;
    o.D = 64;
    o.steps = 300;
    o.step_size = 0.02;
    o.inter_power = 8.0;
    o.intra_power = 8.0;
    o.intra_weight = 0.1;
    o.seed = 2024;
    return design_codebook(o);
}

Codebook orthogonal_codebook(int V, int D, int M) {
    Codebook cb(V, D, M);
    const double a = std::sqrt(cb.codeword_energy());
    int k = 0;
    for (int v = 0; v < V; ++v)
        for (int m = 0; m < M; ++m, ++k) {
            RVec x = RVec::Zero(D);
            x(k) = a;
            cb.slice(v).col(m) = complexify(x);
        }
    return cb;
}

nn::WeightsBundle matched_filter_bundle(const Codebook& cb, int nt, int nr) {
    const int V = cb.V(), D = cb.D(), M = cb.M();
    nn::NetDims dims{V, D, M, nt, nr};
    nn::EncoderWeights enc{dims, {}};
    nn::ReceiverWeights rx{dims, {}, {}};
    for (int v = 0; v < V; ++v) {
        std::vector<double> we(static_cast<std::size_t>(D) * M), wd(static_cast<std::size_t>(M) * D);
        for (int m = 0; m < M; ++m) {
            const RVec c = realify(cb.slice(v).col(m));
            for (int d = 0; d < D; ++d) {
                we[static_cast<std::size_t>(d) * M + m] = c(d);
                wd[static_cast<std::size_t>(m) * D + d] = c(d);
            }
        }
        enc.enc.emplace_back(std::vector<nn::Layer>{nn::Layer::linear(M, D, we, std::vector<double>(D, 0.0)),
                                                    nn::Layer::power_norm(D, cb.codeword_energy())});
        rx.dec.emplace_back(std::vector<nn::Layer>{nn::Layer::linear(D, M, wd, std::vector<double>(M, 0.0)), nn::Layer::softmax(M)});
    }
    const int g = dims.res_in(), o = dims.res_out();
    rx.res = nn::Network({nn::Layer::linear(g, o, std::vector<double>(static_cast<std::size_t>(g) * o, 0.0), std::vector<double>(o, 0.0))});
    return {dims, enc, rx};
}

}  // namespace nos::testing
