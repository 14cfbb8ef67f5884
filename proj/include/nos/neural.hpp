#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "nos/types.hpp"

namespace nos::nn {

enum class LayerKind : std::uint8_t {
    linear = 1,
    batch_norm = 2,
    activation = 3,
    softmax = 4,
    power_norm = 5,
};

enum class Activation : std::uint8_t {
    none = 0,
    relu = 1,
    tanh = 2,
    sigmoid = 3,
    leaky_relu = 4,  // slope 0.01
};

/// One layer of a feed-forward stack. Parameter layout per kind:
///   linear      W (out x in, row-major) followed by b (out)
///   batch_norm  gamma, beta, running_mean, running_var (each in), eps
///   activation  none (the tag selects the function)
///   softmax     none
///   power_norm  target energy
struct Layer {
    LayerKind kind = LayerKind::linear;
    Activation act = Activation::none;
    int in_dim = 0;
    int out_dim = 0;
    std::vector<double> params;

    static Layer linear(int in, int out, std::vector<double> w, std::vector<double> b);
    static Layer batch_norm(std::vector<double> gamma, std::vector<double> beta, std::vector<double> mean,
                            std::vector<double> var, double eps = 1e-5);
    static Layer activation(int dim, Activation act);
    static Layer softmax(int dim);
    static Layer power_norm(int dim, double energy);

    std::size_t expected_param_count() const;
};

class Network {
public:
    Network() = default;
    explicit Network(std::vector<Layer> layers);

    int in_dim() const;
    int out_dim() const;
    const std::vector<Layer>& layers() const noexcept { return layers_; }
    bool empty() const noexcept { return layers_.empty(); }

    RVec forward(const RVec& x) const;

private:
    std::vector<Layer> layers_;
};

struct WeightsError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Shapes shared by the encoder and receiver networks. nt/nr are the antenna
/// counts the residual module was built for.
struct NetDims {
    int V = 0;
    int D = 0;
    int M = 0;
    int nt = 0;
    int nr = 0;

    int res_in() const { return 2 * nr * (nt + 1); }
    int res_out() const { return 2 * nt; }
    friend bool operator==(const NetDims&, const NetDims&) = default;
};

/// V encoder stacks; each maps a length-M one-hot to a length-D real vector
/// with energy D/2V.
struct EncoderWeights {
    NetDims dims;
    std::vector<Network> enc;

    void validate() const;
};

/// Residual module plus V decoder stacks for inference.
struct ReceiverWeights {
    NetDims dims;
    Network res;
    std::vector<Network> dec;

    void validate() const;
};

struct WeightsBundle {
    NetDims dims;
    std::optional<EncoderWeights> encoder;
    std::optional<ReceiverWeights> receiver;
};

void save_weights(const WeightsBundle& bundle, const std::filesystem::path& path);
WeightsBundle load_weights(const std::filesystem::path& path);
EncoderWeights load_encoder_weights(const std::filesystem::path& path);
ReceiverWeights load_receiver_weights(const std::filesystem::path& path);

/// X = (H'H + (sigma2/P) I)^-1 H' Y. At sigma2 == 0 this is the zero-forcing
/// limit, computed with a pseudo-inverse so rank-deficient H is accepted.
CMat mmse_equalize(const CMat& Y, const CMat& H, double sigma2, double P = 1.0);

/// Realified MMSE output plus the residual correction, flattened to length D
/// as [Re(s); Im(s)] where s is the inverse space-time reshape of the
/// equalized block.
RVec residual_detect(const CMat& Y, const CMat& H, const ReceiverWeights& w, double sigma2);

/// One probability vector per encoder.
std::vector<RVec> decode_probs(const RVec& x_equ, const ReceiverWeights& w);

std::vector<int> hard_decisions(const std::vector<RVec>& probs);

}  // namespace nos::nn
