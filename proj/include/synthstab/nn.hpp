#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

namespace synthstab {

/// Dense row-major array of doubles.
struct Tensor {
    std::vector<int> shape;
    std::vector<double> data;

    Tensor() = default;
    explicit Tensor(std::vector<int> dims, double fill = 0.0);

    std::size_t size() const { return data.size(); }
    bool operator==(const Tensor&) const = default;
};

std::size_t element_count(const std::vector<int>& shape);

/// Regressor layout: four 3x3 stride-2 convolutions (padding 1, ReLU), global
/// average pooling, dropout, then three linear layers with ReLU between them.
struct NetConfig {
    int channels = 4;     ///< 2 (frame pair) or 4 (frame pair + flow u, v)
    int input_side = 64;
    std::array<int, 4> conv_widths{16, 32, 64, 64};
    std::array<int, 2> hidden{64, 32};
    int outputs = 2;
    double dropout = 0.5;

    /// Throws InvalidSpec.
    void validate() const;
    bool operator==(const NetConfig&) const = default;
};

/// Spatial side after one 3x3 stride-2 convolution with padding 1.
inline int conv_output_side(int side) { return (side - 1) / 2 + 1; }

class Network {
public:
    static constexpr int kConvLayers = 4;
    static constexpr int kLinearLayers = 3;

    Network() = default;
    /// He-initialized weights, zero biases.
    Network(const NetConfig& cfg, std::uint64_t seed);

    const NetConfig& config() const { return cfg_; }

    /// conv{1..4}.{weight,bias}, fc{1..3}.{weight,bias} in forward order.
    const std::vector<std::string>& parameter_names() const { return names_; }
    std::vector<Tensor>& parameters() { return params_; }
    const std::vector<Tensor>& parameters() const { return params_; }

    /// Zero tensors shaped like the parameters.
    std::vector<Tensor> zero_gradients() const;

    /// Inference pass (dropout disabled). Input shape [channels, side, side].
    /// Throws ShapeMismatch.
    std::vector<double> forward(const Tensor& input) const;

    /// Training pass for one sample: returns 0.5 * mean squared error over the
    /// outputs and adds its gradient, times `weight`, into `grads`. Dropout
    /// masks are derived from `dropout_seed`.
    double accumulate_gradient(const Tensor& input, const std::vector<double>& target,
                               std::uint64_t dropout_seed, double weight,
                               std::vector<Tensor>& grads) const;

    /// Replaces the parameters after checking their shapes (ShapeMismatch).
    void set_parameters(std::vector<Tensor> params);

    bool operator==(const Network& other) const { return cfg_ == other.cfg_ && params_ == other.params_; }

private:
    void build_shapes();

    NetConfig cfg_;
    std::vector<std::string> names_;
    std::vector<Tensor> params_;
};

/// Adam with bias correction.
class Adam {
public:
    Adam(const std::vector<Tensor>& params, double beta1, double beta2, double eps);

    void step(std::vector<Tensor>& params, const std::vector<Tensor>& grads, double learning_rate);
    long steps() const { return t_; }

private:
    double beta1_, beta2_, eps_;
    long t_ = 0;
    std::vector<std::vector<double>> m_, v_;
};

/// Binary weight file: magic "STBW1", then per tensor
///   u32 name length, name bytes, u32 rank, u32 dims[rank], f64 payload
/// little-endian, in a fixed order.
struct NamedTensor {
    std::string name;
    Tensor tensor;
};

void write_tensor_file(const std::string& path, const std::vector<NamedTensor>& tensors);
/// Throws IoFailure on a malformed file.
std::vector<NamedTensor> read_tensor_file(const std::string& path);

}  // namespace synthstab
