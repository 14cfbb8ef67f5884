#include "nos/neural.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>

#include "nos/encoder.hpp"

namespace nos::nn {

namespace {

constexpr char kMagic[4] = {'N', 'O', 'S', 'W'};
constexpr std::uint16_t kVersion = 1;

enum class Role : std::uint8_t { encoder = 0, residual = 1, decoder = 2 };

double apply_activation(Activation a, double x) {
    switch (a) {
        case Activation::none: return x;
        case Activation::relu: return x > 0.0 ? x : 0.0;
        case Activation::tanh: return std::tanh(x);
        case Activation::sigmoid: return 1.0 / (1.0 + std::exp(-x));
        case Activation::leaky_relu: return x > 0.0 ? x : 0.01 * x;
    }
    throw WeightsError("unknown activation tag");
}

void check_layer(const Layer& l) {
    if (l.in_dim < 1 || l.out_dim < 1) throw WeightsError("layer with non-positive dimension");
    if (l.kind != LayerKind::linear && l.in_dim != l.out_dim) throw WeightsError("non-linear layer must preserve width");
    if (l.params.size() != l.expected_param_count()) throw WeightsError("layer parameter count does not match its shape");
    if (l.kind == LayerKind::activation && static_cast<int>(l.act) > static_cast<int>(Activation::leaky_relu))
        throw WeightsError("unknown activation tag");
    for (double p : l.params)
        if (!std::isfinite(p)) throw WeightsError("non-finite layer parameter");
}

class Writer {
public:
    template <typename T>
    void put(T v) {
        using U = std::make_unsigned_t<T>;
        const auto u = static_cast<U>(v);
        for (std::size_t i = 0; i < sizeof(T); ++i) buf.push_back(static_cast<char>((u >> (8 * i)) & 0xff));
    }
    void put_f32(double x) { put(std::bit_cast<std::uint32_t>(static_cast<float>(x))); }
    std::vector<char> buf;
};

class Reader {
public:
    explicit Reader(std::vector<unsigned char> b) : buf_(std::move(b)) {}
    template <typename T>
    T get() {
        need(sizeof(T));
        T v = 0;
        for (std::size_t i = 0; i < sizeof(T); ++i) v |= static_cast<T>(static_cast<T>(buf_[pos_ + i]) << (8 * i));
        pos_ += sizeof(T);
        return v;
    }
    double get_f32() { return std::bit_cast<float>(get<std::uint32_t>()); }
    const unsigned char* raw(std::size_t n) {
        need(n);
        const auto* p = buf_.data() + pos_;
        pos_ += n;
        return p;
    }
    bool done() const { return pos_ == buf_.size(); }

private:
    void need(std::size_t n) const {
        if (pos_ + n > buf_.size()) throw WeightsError("weights file truncated");
    }
    std::vector<unsigned char> buf_;
    std::size_t pos_ = 0;
};

void write_network(Writer& w, Role role, int index, const Network& net) {
    w.put(static_cast<std::uint8_t>(role));
    w.put(static_cast<std::uint16_t>(index));
    w.put(static_cast<std::uint32_t>(net.layers().size()));
    for (const auto& l : net.layers()) {
        w.put(static_cast<std::uint8_t>(l.kind));
        w.put(static_cast<std::uint8_t>(l.act));
        w.put(static_cast<std::uint32_t>(l.in_dim));
        w.put(static_cast<std::uint32_t>(l.out_dim));
        w.put(static_cast<std::uint32_t>(l.params.size()));
        for (double p : l.params) w.put_f32(p);
    }
}

Network read_network(Reader& r) {
    const auto n_layers = r.get<std::uint32_t>();
    if (n_layers > 4096) throw WeightsError("implausible layer count");
    std::vector<Layer> layers;
    layers.reserve(n_layers);
    for (std::uint32_t i = 0; i < n_layers; ++i) {
        Layer l;
        const auto kind = r.get<std::uint8_t>();
        if (kind < 1 || kind > 5) throw WeightsError("unknown layer kind " + std::to_string(kind));
        l.kind = static_cast<LayerKind>(kind);
        l.act = static_cast<Activation>(r.get<std::uint8_t>());
        l.in_dim = static_cast<int>(r.get<std::uint32_t>());
        l.out_dim = static_cast<int>(r.get<std::uint32_t>());
        const auto n = r.get<std::uint32_t>();
        if (n != l.expected_param_count()) throw WeightsError("layer parameter count does not match its shape");
        l.params.resize(n);
        for (auto& p : l.params) p = r.get_f32();
        layers.push_back(std::move(l));
    }
    return Network(std::move(layers));
}

void check_net(const Network& net, int in, int out, const char* what) {
    if (net.empty()) throw WeightsError(std::string(what) + ": empty network");
    if (net.in_dim() != in || net.out_dim() != out)
        throw WeightsError(std::string(what) + ": expected " + std::to_string(in) + " -> " + std::to_string(out) + ", got " +
                           std::to_string(net.in_dim()) + " -> " + std::to_string(net.out_dim()));
}

}  // namespace

Layer Layer::linear(int in, int out, std::vector<double> w, std::vector<double> b) {
    Layer l{LayerKind::linear, Activation::none, in, out, std::move(w)};
    l.params.insert(l.params.end(), b.begin(), b.end());
    check_layer(l);
    return l;
}

Layer Layer::batch_norm(std::vector<double> gamma, std::vector<double> beta, std::vector<double> mean,
                        std::vector<double> var, double eps) {
    const int n = static_cast<int>(gamma.size());
    Layer l{LayerKind::batch_norm, Activation::none, n, n, std::move(gamma)};
    for (auto* v : {&beta, &mean, &var}) l.params.insert(l.params.end(), v->begin(), v->end());
    l.params.push_back(eps);
    check_layer(l);
    return l;
}

Layer Layer::activation(int dim, Activation act) { return Layer{LayerKind::activation, act, dim, dim, {}}; }

Layer Layer::softmax(int dim) { return Layer{LayerKind::softmax, Activation::none, dim, dim, {}}; }

Layer Layer::power_norm(int dim, double energy) { return Layer{LayerKind::power_norm, Activation::none, dim, dim, {energy}}; }

std::size_t Layer::expected_param_count() const {
    switch (kind) {
        case LayerKind::linear: return static_cast<std::size_t>(out_dim) * static_cast<std::size_t>(in_dim) + static_cast<std::size_t>(out_dim);
        case LayerKind::batch_norm: return 4 * static_cast<std::size_t>(in_dim) + 1;
        case LayerKind::activation:
        case LayerKind::softmax: return 0;
        case LayerKind::power_norm: return 1;
    }
    return 0;
}

Network::Network(std::vector<Layer> layers) : layers_(std::move(layers)) {
    for (std::size_t i = 0; i < layers_.size(); ++i) {
        check_layer(layers_[i]);
        if (i > 0 && layers_[i].in_dim != layers_[i - 1].out_dim)
            throw WeightsError("layer " + std::to_string(i) + " input width does not match previous output width");
    }
}

int Network::in_dim() const { return layers_.empty() ? 0 : layers_.front().in_dim; }
int Network::out_dim() const { return layers_.empty() ? 0 : layers_.back().out_dim; }

RVec Network::forward(const RVec& x) const {
    if (x.size() != in_dim()) throw std::invalid_argument("Network::forward: input width mismatch");
    RVec h = x;
    for (const auto& l : layers_) {
        switch (l.kind) {
            case LayerKind::linear: {
                Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>> W(l.params.data(), l.out_dim, l.in_dim);
                Eigen::Map<const RVec> b(l.params.data() + static_cast<std::ptrdiff_t>(l.out_dim) * l.in_dim, l.out_dim);
                h = W * h + b;
                break;
            }
            case LayerKind::batch_norm: {
                const auto n = static_cast<std::size_t>(l.in_dim);
                const double eps = l.params[4 * n];
                for (std::size_t i = 0; i < n; ++i) {
                    const double gamma = l.params[i], beta = l.params[n + i], mean = l.params[2 * n + i], var = l.params[3 * n + i];
                    h(static_cast<Eigen::Index>(i)) = gamma * (h(static_cast<Eigen::Index>(i)) - mean) / std::sqrt(var + eps) + beta;
                }
                break;
            }
            case LayerKind::activation:
                h = h.unaryExpr([a = l.act](double v) { return apply_activation(a, v); });
                break;
            case LayerKind::softmax: {
                const double mx = h.maxCoeff();
                h = (h.array() - mx).exp();
                h /= h.sum();
                break;
            }
            case LayerKind::power_norm: {
                const double nrm = h.norm();
                if (nrm > 0.0) h *= std::sqrt(l.params[0]) / nrm;
                break;
            }
        }
    }
    return h;
}

void EncoderWeights::validate() const {
    if (enc.size() != static_cast<std::size_t>(dims.V)) throw WeightsError("encoder count != V");
    for (const auto& n : enc) check_net(n, dims.M, dims.D, "encoder");
}

void ReceiverWeights::validate() const {
    if (dec.size() != static_cast<std::size_t>(dims.V)) throw WeightsError("decoder count != V");
    check_net(res, dims.res_in(), dims.res_out(), "residual module");
    for (const auto& n : dec) check_net(n, dims.D, dims.M, "decoder");
    if (dims.nt < 1 || dims.nr < 1 || dims.D % (2 * dims.nt) != 0) throw WeightsError("nt must divide D/2");
}

void save_weights(const WeightsBundle& bundle, const std::filesystem::path& path) {
    Writer w;
    w.buf.insert(w.buf.end(), kMagic, kMagic + 4);
    w.put(kVersion);
    const auto& d = bundle.dims;
    w.put(static_cast<std::uint16_t>(d.V));
    for (int x : {d.D, d.M, d.nt, d.nr}) w.put(static_cast<std::uint32_t>(x));
    std::uint32_t nets = 0;
    if (bundle.encoder) nets += static_cast<std::uint32_t>(bundle.encoder->enc.size());
    if (bundle.receiver) nets += 1 + static_cast<std::uint32_t>(bundle.receiver->dec.size());
    w.put(nets);
    if (bundle.encoder)
        for (std::size_t v = 0; v < bundle.encoder->enc.size(); ++v) write_network(w, Role::encoder, static_cast<int>(v), bundle.encoder->enc[v]);
    if (bundle.receiver) {
        write_network(w, Role::residual, 0, bundle.receiver->res);
        for (std::size_t v = 0; v < bundle.receiver->dec.size(); ++v) write_network(w, Role::decoder, static_cast<int>(v), bundle.receiver->dec[v]);
    }
    std::ofstream os(path, std::ios::binary | std::ios::trunc);
    if (!os) throw WeightsError("cannot open " + path.string() + " for writing");
    os.write(w.buf.data(), static_cast<std::streamsize>(w.buf.size()));
    if (!os) throw WeightsError("write failed: " + path.string());
}

WeightsBundle load_weights(const std::filesystem::path& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw WeightsError("cannot open " + path.string());
    Reader r(std::vector<unsigned char>((std::istreambuf_iterator<char>(is)), std::istreambuf_iterator<char>()));
    if (std::memcmp(r.raw(4), kMagic, 4) != 0) throw WeightsError("not a weights file (bad magic): " + path.string());
    if (r.get<std::uint16_t>() != kVersion) throw WeightsError("unsupported weights version");
    WeightsBundle b;
    b.dims.V = r.get<std::uint16_t>();
    b.dims.D = static_cast<int>(r.get<std::uint32_t>());
    b.dims.M = static_cast<int>(r.get<std::uint32_t>());
    b.dims.nt = static_cast<int>(r.get<std::uint32_t>());
    b.dims.nr = static_cast<int>(r.get<std::uint32_t>());
    const auto nets = r.get<std::uint32_t>();
    std::vector<std::optional<Network>> enc(static_cast<std::size_t>(b.dims.V)), dec(static_cast<std::size_t>(b.dims.V));
    std::optional<Network> res;
    for (std::uint32_t i = 0; i < nets; ++i) {
        const auto role = r.get<std::uint8_t>();
        const auto index = r.get<std::uint16_t>();
        Network net = read_network(r);
        if (role == static_cast<std::uint8_t>(Role::residual)) {
            res = std::move(net);
            continue;
        }
        if (role > static_cast<std::uint8_t>(Role::decoder)) throw WeightsError("unknown network role");
        if (index >= b.dims.V) throw WeightsError("network index out of range");
        auto& slot = role == static_cast<std::uint8_t>(Role::encoder) ? enc[index] : dec[index];
        slot = std::move(net);
    }
    if (!r.done()) throw WeightsError("trailing bytes in weights file");

    const auto all = [](const auto& v) { return std::all_of(v.begin(), v.end(), [](const auto& o) { return o.has_value(); }); };
    const auto none = [](const auto& v) { return std::none_of(v.begin(), v.end(), [](const auto& o) { return o.has_value(); }); };
    if (all(enc)) {
        EncoderWeights e{b.dims, {}};
        for (auto& n : enc) e.enc.push_back(std::move(*n));
        e.validate();
        b.encoder = std::move(e);
    } else if (!none(enc)) {
        throw WeightsError("weights file has encoders for only some of the V layers");
    }
    if (res && all(dec)) {
        ReceiverWeights rw{b.dims, std::move(*res), {}};
        for (auto& n : dec) rw.dec.push_back(std::move(*n));
        rw.validate();
        b.receiver = std::move(rw);
    } else if (res || !none(dec)) {
        throw WeightsError("weights file has an incomplete receiver");
    }
    return b;
}

EncoderWeights load_encoder_weights(const std::filesystem::path& path) {
    auto b = load_weights(path);
    if (!b.encoder) throw WeightsError("weights file carries no encoder networks: " + path.string());
    return std::move(*b.encoder);
}

ReceiverWeights load_receiver_weights(const std::filesystem::path& path) {
    auto b = load_weights(path);
    if (!b.receiver) throw WeightsError("weights file carries no receiver networks: " + path.string());
    return std::move(*b.receiver);
}

CMat mmse_equalize(const CMat& Y, const CMat& H, double sigma2, double P) {
    if (Y.rows() != H.rows()) throw std::invalid_argument("mmse_equalize: Y and H row counts differ");
    if (sigma2 < 0.0 || !(P > 0.0)) throw std::invalid_argument("mmse_equalize: need sigma2 >= 0 and P > 0");
    if (sigma2 == 0.0) return H.completeOrthogonalDecomposition().solve(Y);
    CMat A = H.adjoint() * H;
    A.diagonal().array() += sigma2 / P;
    return A.llt().solve(H.adjoint() * Y);
}

RVec residual_detect(const CMat& Y, const CMat& H, const ReceiverWeights& w, double sigma2) {
    const int nt = static_cast<int>(H.cols()), nr = static_cast<int>(H.rows()), mc = static_cast<int>(Y.cols());
    if (nt != w.dims.nt || nr != w.dims.nr) throw std::invalid_argument("residual_detect: antenna counts differ from the weights");
    if (2 * nt * mc != w.dims.D) throw std::invalid_argument("residual_detect: 2*nt*mc != D");
    CMat X = mmse_equalize(Y, H, sigma2);

    RVec g(w.dims.res_in());
    const CVec h = vectorize(H);
    const auto hn = h.size();
    g.segment(2 * nr, hn) = h.real();
    g.segment(2 * nr + hn, hn) = h.imag();
    for (int t = 0; t < mc; ++t) {
        g.head(nr) = Y.col(t).real();
        g.segment(nr, nr) = Y.col(t).imag();
        const RVec r = w.res.forward(g);
        for (int a = 0; a < nt; ++a) X(a, t) += cplx(r(a), r(nt + a));
    }
    return realify(vectorize(X));
}

std::vector<RVec> decode_probs(const RVec& x_equ, const ReceiverWeights& w) {
    if (x_equ.size() != w.dims.D) throw std::invalid_argument("decode_probs: input length != D");
    if (w.dec.size() != static_cast<std::size_t>(w.dims.V)) throw std::invalid_argument("decode_probs: decoder count != V");
    std::vector<RVec> out;
    out.reserve(w.dec.size());
    for (const auto& net : w.dec) {
        RVec p = net.forward(x_equ);
        // Normalize if the stack does not end in a softmax.
        if (net.layers().back().kind != LayerKind::softmax) {
            const double mx = p.maxCoeff();
            p = (p.array() - mx).exp();
            p /= p.sum();
        }
        out.push_back(std::move(p));
    }
    return out;
}

std::vector<int> hard_decisions(const std::vector<RVec>& probs) {
    std::vector<int> idx;
    idx.reserve(probs.size());
    for (const auto& p : probs) {
        Eigen::Index best = 0;
        p.maxCoeff(&best);
        idx.push_back(static_cast<int>(best));
    }
    return idx;
}

}  // namespace nos::nn
