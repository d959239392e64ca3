#pragma once

// Convolutional steganalysis network: a chain of convolutional layers
// (convolution -> bias -> activation -> optional pooling) followed by a single
// affine output layer of two neurons and a log-softmax.
//
// Each layer applies its k-th kernel to every incoming map and sums the
// results, so a layer owns kernel_count kernels regardless of how many maps it
// receives.
//
// Feature flattening order, shared by forward/backward and the output weight
// layout: map-major, then row-major inside each map.

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "stegcnn/tensor.hpp"

namespace stegcnn {

struct ConvLayerSpec {
    int kernel_count = 1;
    int kernel_size = 3;
    ConvGeometry geom{};
    ActivationKind act = ActivationKind::tanh();
    PoolSpec pool = PoolSpec::none();

    friend bool operator==(const ConvLayerSpec&, const ConvLayerSpec&) = default;
};

struct NetworkSpec {
    static constexpr int output_classes = 2;

    int input_size = 0;
    std::vector<ConvLayerSpec> conv_layers;

    friend bool operator==(const NetworkSpec&, const NetworkSpec&) = default;
};

/// 512x512 input; 1 kernel 3x3; 64 kernels 509x509; tanh; no pooling.
NetworkSpec paper_network_spec();

/// Same architecture at side `input_size`: one 3x3 kernel, then `wide_kernels`
/// kernels as large as possible while leaving 2x2 final maps.
NetworkSpec desk_network_spec(int input_size, int wide_kernels = 16);

struct LayerShape {
    int input_maps = 0;
    int input_side = 0;
    int conv_side = 0;    // after convolution
    int output_side = 0;  // after pooling
};

struct NetworkShape {
    std::vector<LayerShape> layers;
    int feature_count = 0;
};

/// Walks the dimension chain; throws std::invalid_argument naming the failing
/// layer index when any step is invalid.
NetworkShape network_shape(const NetworkSpec& spec);

std::uint64_t layer_parameter_count(const NetworkSpec& spec, std::size_t layer);
std::uint64_t output_parameter_count(const NetworkSpec& spec);
/// Total trainable parameters (closed form, no allocation).
std::uint64_t parameter_count(const NetworkSpec& spec);

/// All trainable values in one flat buffer. Also used as the gradient store,
/// which mirrors its shape exactly.
///
/// Layout: for each conv layer, kernel_count * size^2 weights (kernel-major)
/// then kernel_count biases; then 2 * feature_count output weights (class-major)
/// then 2 output biases.
class ParameterStore {
public:
    ParameterStore() = default;
    /// Zero-initialized store for `spec`.
    explicit ParameterStore(const NetworkSpec& spec);

    const NetworkSpec& spec() const noexcept { return spec_; }
    const NetworkShape& shape() const noexcept { return shape_; }

    std::size_t size() const noexcept { return values_.size(); }
    std::span<double> values() noexcept { return values_; }
    std::span<const double> values() const noexcept { return values_; }

    std::span<double> kernel_weights(std::size_t layer, int kernel);
    std::span<const double> kernel_weights(std::size_t layer, int kernel) const;
    std::span<double> layer_biases(std::size_t layer);
    std::span<const double> layer_biases(std::size_t layer) const;
    KernelView kernel(std::size_t layer, int kernel) const;

    /// Row `cls` of the output weight matrix (feature_count entries).
    std::span<double> output_weights(int cls);
    std::span<const double> output_weights(int cls) const;
    std::span<double> output_biases();
    std::span<const double> output_biases() const;

    void set_zero() noexcept;

    /// Same spec (hence same layout) as `other`.
    bool compatible(const ParameterStore& other) const noexcept { return spec_ == other.spec_; }

    friend bool operator==(const ParameterStore& a, const ParameterStore& b) {
        return a.spec_ == b.spec_ && a.values_ == b.values_;
    }

private:
    struct LayerOffsets {
        std::size_t weights = 0;
        std::size_t biases = 0;
    };

    NetworkSpec spec_;
    NetworkShape shape_;
    std::vector<LayerOffsets> offsets_;
    std::size_t output_offset_ = 0;
    std::vector<double> values_;
};

/// Fresh parameters: weights uniform in [-1/sqrt(fan_in), 1/sqrt(fan_in)] with
/// fan_in = incoming maps * kernel_size^2 (conv) or feature_count (output);
/// biases zero. Deterministic in `seed`.
ParameterStore build_network(const NetworkSpec& spec, std::uint64_t seed);

/// Log-probabilities of cover (index 0) and stego (index 1).
struct ClassLogProbs {
    std::array<double, 2> logp{};

    double operator[](int cls) const noexcept { return logp[static_cast<std::size_t>(cls)]; }
    /// argmax; ties resolve to cover.
    int predicted() const noexcept { return logp[1] > logp[0] ? 1 : 0; }
};

ClassLogProbs log_softmax(std::array<double, 2> logits) noexcept;

/// Flattened output of the convolutional part.
std::vector<double> extract_features(const ParameterStore& params, const NetworkSpec& spec, const ImageGrid& image);

ClassLogProbs forward(const ParameterStore& params, const NetworkSpec& spec, const ImageGrid& image);

/// Negative log-likelihood of `label`.
double loss(const ClassLogProbs& probs, int label);

struct SampleResult {
    ClassLogProbs probs;
    double loss = 0.0;
};

/// Adds scale * dLoss/dParams for one sample into `grads`.
SampleResult accumulate_gradient(const ParameterStore& params, const NetworkSpec& spec, const ImageGrid& image,
                                 int label, ParameterStore& grads, double scale = 1.0);

/// Gradient of the loss w.r.t. every parameter for one sample.
ParameterStore backward(const ParameterStore& params, const NetworkSpec& spec, const ImageGrid& image, int label);

std::string describe(const NetworkSpec& spec);

}  // namespace stegcnn
