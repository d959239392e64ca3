#include "stegcnn/network.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

#include "stegcnn/rng.hpp"
#include "stegcnn/simd.hpp"

namespace stegcnn {

NetworkSpec paper_network_spec() { return desk_network_spec(512, 64); }

NetworkSpec desk_network_spec(int input_size, int wide_kernels) {
    if (input_size < 4) throw std::invalid_argument("desk network needs input_size >= 4");
    NetworkSpec spec;
    spec.input_size = input_size;
    spec.conv_layers.push_back({1, 3, {1, 0}, ActivationKind::tanh(), PoolSpec::none()});
    // Largest kernel that still leaves 2x2 maps after the 3x3 layer.
    spec.conv_layers.push_back({wide_kernels, (input_size - 2) - 1, {1, 0}, ActivationKind::tanh(), PoolSpec::none()});
    return spec;
}

NetworkShape network_shape(const NetworkSpec& spec) {
    if (spec.input_size <= 0) throw std::invalid_argument("network input_size must be positive");
    if (spec.conv_layers.empty()) throw std::invalid_argument("network needs at least one convolutional layer");
    NetworkShape shape;
    int maps = 1;
    int side = spec.input_size;
    for (std::size_t l = 0; l < spec.conv_layers.size(); ++l) {
        const auto& layer = spec.conv_layers[l];
        try {
            if (layer.kernel_count <= 0) throw std::invalid_argument("kernel_count must be positive");
            if (layer.kernel_size <= 0) throw std::invalid_argument("kernel_size must be positive");
            LayerShape ls;
            ls.input_maps = maps;
            ls.input_side = side;
            ls.conv_side = conv_output_dim(side, layer.kernel_size, layer.geom);
            ls.output_side = pool_output_dim(ls.conv_side, layer.pool);
            shape.layers.push_back(ls);
            maps = layer.kernel_count;
            side = ls.output_side;
        } catch (const std::invalid_argument& e) {
            std::ostringstream msg;
            msg << "invalid dimension chain at conv layer " << l << ": " << e.what();
            throw std::invalid_argument(msg.str());
        }
    }
    shape.feature_count = maps * side * side;
    return shape;
}

std::uint64_t layer_parameter_count(const NetworkSpec& spec, std::size_t layer) {
    const auto& l = spec.conv_layers.at(layer);
    const auto k = static_cast<std::uint64_t>(l.kernel_size);
    return static_cast<std::uint64_t>(l.kernel_count) * (k * k + 1);
}

std::uint64_t output_parameter_count(const NetworkSpec& spec) {
    const auto features = static_cast<std::uint64_t>(network_shape(spec).feature_count);
    return NetworkSpec::output_classes * (features + 1);
}

std::uint64_t parameter_count(const NetworkSpec& spec) {
    std::uint64_t total = output_parameter_count(spec);
    for (std::size_t l = 0; l < spec.conv_layers.size(); ++l) total += layer_parameter_count(spec, l);
    return total;
}

ParameterStore::ParameterStore(const NetworkSpec& spec) : spec_{spec}, shape_{network_shape(spec)} {
    std::size_t offset = 0;
    for (const auto& layer : spec_.conv_layers) {
        LayerOffsets lo;
        lo.weights = offset;
        offset += static_cast<std::size_t>(layer.kernel_count) * static_cast<std::size_t>(layer.kernel_size) *
                  static_cast<std::size_t>(layer.kernel_size);
        lo.biases = offset;
        offset += static_cast<std::size_t>(layer.kernel_count);
        offsets_.push_back(lo);
    }
    output_offset_ = offset;
    offset += NetworkSpec::output_classes * (static_cast<std::size_t>(shape_.feature_count) + 1);
    values_.assign(offset, 0.0);
}

std::span<double> ParameterStore::kernel_weights(std::size_t layer, int kernel) {
    const auto& l = spec_.conv_layers.at(layer);
    const auto area = static_cast<std::size_t>(l.kernel_size) * static_cast<std::size_t>(l.kernel_size);
    return std::span<double>(values_).subspan(offsets_[layer].weights + static_cast<std::size_t>(kernel) * area, area);
}

std::span<const double> ParameterStore::kernel_weights(std::size_t layer, int kernel) const {
    return const_cast<ParameterStore*>(this)->kernel_weights(layer, kernel);
}

std::span<double> ParameterStore::layer_biases(std::size_t layer) {
    return std::span<double>(values_).subspan(offsets_.at(layer).biases,
                                              static_cast<std::size_t>(spec_.conv_layers[layer].kernel_count));
}

std::span<const double> ParameterStore::layer_biases(std::size_t layer) const {
    return const_cast<ParameterStore*>(this)->layer_biases(layer);
}

KernelView ParameterStore::kernel(std::size_t layer, int k) const {
    return {spec_.conv_layers.at(layer).kernel_size, kernel_weights(layer, k),
            layer_biases(layer)[static_cast<std::size_t>(k)]};
}

std::span<double> ParameterStore::output_weights(int cls) {
    const auto features = static_cast<std::size_t>(shape_.feature_count);
    return std::span<double>(values_).subspan(output_offset_ + static_cast<std::size_t>(cls) * features, features);
}

std::span<const double> ParameterStore::output_weights(int cls) const {
    return const_cast<ParameterStore*>(this)->output_weights(cls);
}

std::span<double> ParameterStore::output_biases() {
    const auto features = static_cast<std::size_t>(shape_.feature_count);
    return std::span<double>(values_).subspan(output_offset_ + NetworkSpec::output_classes * features,
                                              NetworkSpec::output_classes);
}

std::span<const double> ParameterStore::output_biases() const {
    return const_cast<ParameterStore*>(this)->output_biases();
}

void ParameterStore::set_zero() noexcept { std::fill(values_.begin(), values_.end(), 0.0); }

ParameterStore build_network(const NetworkSpec& spec, std::uint64_t seed) {
    ParameterStore params(spec);
    Xoshiro256 rng{seed};
    for (std::size_t l = 0; l < spec.conv_layers.size(); ++l) {
        const auto& layer = spec.conv_layers[l];
        const double fan_in =
            static_cast<double>(params.shape().layers[l].input_maps) * layer.kernel_size * layer.kernel_size;
        const double bound = 1.0 / std::sqrt(fan_in);
        for (int k = 0; k < layer.kernel_count; ++k)
            for (double& w : params.kernel_weights(l, k)) w = rng.uniform(-bound, bound);
    }
    const double bound = 1.0 / std::sqrt(static_cast<double>(params.shape().feature_count));
    for (int c = 0; c < NetworkSpec::output_classes; ++c)
        for (double& w : params.output_weights(c)) w = rng.uniform(-bound, bound);
    return params;
}

ClassLogProbs log_softmax(std::array<double, 2> logits) noexcept {
    const double m = std::max(logits[0], logits[1]);
    const double lse = m + std::log(std::exp(logits[0] - m) + std::exp(logits[1] - m));
    return {{logits[0] - lse, logits[1] - lse}};
}

double loss(const ClassLogProbs& probs, int label) {
    if (label != 0 && label != 1) throw std::invalid_argument("label must be 0 (cover) or 1 (stego)");
    return std::max(0.0, -probs[label]);
}

namespace {

struct LayerTrace {
    std::vector<ImageGrid> pre_activation;
    std::vector<ImageGrid> activation;
    std::vector<ImageGrid> output;  // after pooling
};

struct Trace {
    std::vector<LayerTrace> layers;
    std::vector<double> features;
    std::array<double, 2> logits{};
};

void check_inputs(const ParameterStore& params, const NetworkSpec& spec, const ImageGrid& image) {
    if (!(params.spec() == spec)) throw std::invalid_argument("parameter store was built for a different network spec");
    if (image.height() != spec.input_size || image.width() != spec.input_size) {
        std::ostringstream msg;
        msg << "image is " << image.height() << "x" << image.width() << " but the network expects " << spec.input_size
            << "x" << spec.input_size;
        throw std::invalid_argument(msg.str());
    }
}

Trace run_forward(const ParameterStore& params, const NetworkSpec& spec, const ImageGrid& image, bool keep_trace) {
    check_inputs(params, spec, image);
    Trace trace;
    std::vector<ImageGrid> current{image};
    for (std::size_t l = 0; l < spec.conv_layers.size(); ++l) {
        const auto& layer = spec.conv_layers[l];
        const auto& ls = params.shape().layers[l];
        LayerTrace lt;
        std::vector<ImageGrid> next;
        next.reserve(static_cast<std::size_t>(layer.kernel_count));
        for (int k = 0; k < layer.kernel_count; ++k) {
            const KernelView kernel = params.kernel(l, k);
            ImageGrid z(ls.conv_side, ls.conv_side);
            for (const auto& in : current) conv2d_accumulate(in, kernel, layer.geom, z);
            for (double& v : z.values()) v += kernel.bias;
            ImageGrid a = z;
            activate(a, layer.act);
            ImageGrid f = pool(a, layer.pool);
            if (keep_trace) {
                lt.pre_activation.push_back(std::move(z));
                lt.activation.push_back(std::move(a));
            }
            next.push_back(std::move(f));
        }
        if (keep_trace) lt.output = next;
        trace.layers.push_back(std::move(lt));
        current = std::move(next);
    }
    trace.features.reserve(static_cast<std::size_t>(params.shape().feature_count));
    for (const auto& map : current) trace.features.insert(trace.features.end(), map.values().begin(), map.values().end());
    const auto bias = params.output_biases();
    for (int c = 0; c < NetworkSpec::output_classes; ++c)
        trace.logits[static_cast<std::size_t>(c)] =
            simd::dot(params.output_weights(c), trace.features) + bias[static_cast<std::size_t>(c)];
    return trace;
}

}  // namespace

std::vector<double> extract_features(const ParameterStore& params, const NetworkSpec& spec, const ImageGrid& image) {
    return run_forward(params, spec, image, false).features;
}

ClassLogProbs forward(const ParameterStore& params, const NetworkSpec& spec, const ImageGrid& image) {
    return log_softmax(run_forward(params, spec, image, false).logits);
}

SampleResult accumulate_gradient(const ParameterStore& params, const NetworkSpec& spec, const ImageGrid& image,
                                 int label, ParameterStore& grads, double scale) {
    if (!grads.compatible(params)) throw std::invalid_argument("gradient store does not match the parameter store");
    if (label != 0 && label != 1) throw std::invalid_argument("label must be 0 (cover) or 1 (stego)");
    Trace trace = run_forward(params, spec, image, true);
    SampleResult result;
    result.probs = log_softmax(trace.logits);
    result.loss = loss(result.probs, label);

    // d loss / d logits = softmax - onehot
    std::array<double, 2> dlogits{};
    for (int c = 0; c < 2; ++c)
        dlogits[static_cast<std::size_t>(c)] = scale * (std::exp(result.probs[c]) - (c == label ? 1.0 : 0.0));

    const auto features = static_cast<std::size_t>(params.shape().feature_count);
    std::vector<double> dfeatures(features, 0.0);
    for (int c = 0; c < 2; ++c) {
        const double g = dlogits[static_cast<std::size_t>(c)];
        simd::axpy(g, trace.features.data(), grads.output_weights(c).data(), features);
        grads.output_biases()[static_cast<std::size_t>(c)] += g;
        simd::axpy(g, params.output_weights(c).data(), dfeatures.data(), features);
    }

    // Unflatten into per-map gradients of the last layer's outputs.
    const std::size_t last = spec.conv_layers.size() - 1;
    std::vector<ImageGrid> dout;
    {
        const int side = params.shape().layers[last].output_side;
        const std::size_t area = static_cast<std::size_t>(side) * static_cast<std::size_t>(side);
        for (int k = 0; k < spec.conv_layers[last].kernel_count; ++k) {
            const auto first = dfeatures.begin() + static_cast<std::ptrdiff_t>(static_cast<std::size_t>(k) * area);
            dout.emplace_back(side, side, std::vector<double>(first, first + static_cast<std::ptrdiff_t>(area)));
        }
    }

    for (std::size_t l = spec.conv_layers.size(); l-- > 0;) {
        const auto& layer = spec.conv_layers[l];
        const auto& ls = params.shape().layers[l];
        const auto& lt = trace.layers[l];
        const std::span<const ImageGrid> inputs =
            l == 0 ? std::span<const ImageGrid>(&image, 1) : std::span<const ImageGrid>(trace.layers[l - 1].output);
        ImageGrid dinput = l > 0 ? ImageGrid(ls.input_side, ls.input_side) : ImageGrid{};

        for (int k = 0; k < layer.kernel_count; ++k) {
            const auto ku = static_cast<std::size_t>(k);
            ImageGrid dz = pool_backward(lt.activation[ku], dout[ku], layer.pool);
            const auto z = lt.pre_activation[ku].values();
            const auto a = lt.activation[ku].values();
            auto dzv = dz.values();
            double bias_grad = 0.0;
            for (std::size_t i = 0; i < dzv.size(); ++i) {
                const double d = layer.act.variant == ActivationKind::Variant::tanh ? 1.0 - a[i] * a[i]
                                                                                    : activate_derivative(z[i], layer.act);
                dzv[i] *= d;
                bias_grad += dzv[i];
            }
            grads.layer_biases(l)[ku] += bias_grad;
            for (const auto& in : inputs) conv2d_weight_grad(in, dz, layer.kernel_size, layer.geom, grads.kernel_weights(l, k));
            if (l > 0) conv2d_input_grad(dz, params.kernel(l, k), layer.geom, dinput);
        }
        if (l > 0) {
            // Every incoming map met the same kernels, so all share this gradient.
            dout.assign(static_cast<std::size_t>(ls.input_maps), dinput);
        }
    }
    return result;
}

ParameterStore backward(const ParameterStore& params, const NetworkSpec& spec, const ImageGrid& image, int label) {
    ParameterStore grads(spec);
    accumulate_gradient(params, spec, image, label, grads);
    return grads;
}

std::string describe(const NetworkSpec& spec) {
    std::ostringstream out;
    out << "input " << spec.input_size << "x" << spec.input_size;
    for (const auto& layer : spec.conv_layers) {
        out << " -> conv " << layer.kernel_count << "x" << layer.kernel_size << "x" << layer.kernel_size << " (S="
            << layer.geom.stride << ", P=" << layer.geom.padding << ") " << to_string(layer.act);
        if (layer.pool.mode != PoolSpec::Mode::none)
            out << " " << to_string(layer.pool.mode) << "-pool " << layer.pool.region << "/" << layer.pool.stride;
    }
    out << " -> linear 2 -> log-softmax";
    return out.str();
}

}  // namespace stegcnn
