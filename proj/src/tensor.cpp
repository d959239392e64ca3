#include "stegcnn/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

#include "stegcnn/simd.hpp"

namespace stegcnn {

ImageGrid::ImageGrid(int height, int width) : height_{height}, width_{width} {
    if (height <= 0 || width <= 0) throw std::invalid_argument("ImageGrid dimensions must be positive");
    values_.assign(static_cast<std::size_t>(height) * static_cast<std::size_t>(width), 0.0);
}

ImageGrid::ImageGrid(int height, int width, std::vector<double> values)
    : height_{height}, width_{width}, values_{std::move(values)} {
    if (height <= 0 || width <= 0) throw std::invalid_argument("ImageGrid dimensions must be positive");
    if (values_.size() != static_cast<std::size_t>(height) * static_cast<std::size_t>(width)) {
        std::ostringstream msg;
        msg << "ImageGrid " << height << "x" << width << " given " << values_.size() << " values";
        throw std::invalid_argument(msg.str());
    }
    if (!std::all_of(values_.begin(), values_.end(), [](double v) { return std::isfinite(v); }))
        throw std::invalid_argument("ImageGrid values must be finite");
}

ImageGrid ImageGrid::filled(int height, int width, double value) {
    ImageGrid grid(height, width);
    std::fill(grid.values_.begin(), grid.values_.end(), value);
    return grid;
}

Kernel::Kernel(int size_, std::vector<double> weights_, double bias_)
    : size{size_}, weights{std::move(weights_)}, bias{bias_} {
    if (size <= 0) throw std::invalid_argument("kernel size must be positive");
    if (weights.size() != static_cast<std::size_t>(size) * static_cast<std::size_t>(size))
        throw std::invalid_argument("kernel weight count must be size^2");
    if (!std::isfinite(bias) ||
        !std::all_of(weights.begin(), weights.end(), [](double v) { return std::isfinite(v); }))
        throw std::invalid_argument("kernel values must be finite");
}

ActivationKind ActivationKind::gaussian(double sigma) {
    if (!(sigma > 0.0)) throw std::invalid_argument("gaussian activation needs sigma > 0");
    return {Variant::gaussian, sigma};
}

std::string to_string(const ActivationKind& act) {
    switch (act.variant) {
        case ActivationKind::Variant::tanh: return "tanh";
        case ActivationKind::Variant::relu: return "relu";
        case ActivationKind::Variant::gaussian: {
            std::ostringstream out;
            out.precision(17);
            out << "gaussian:" << act.sigma;
            return out.str();
        }
    }
    return "unknown";
}

ActivationKind parse_activation(const std::string& text) {
    if (text == "tanh") return ActivationKind::tanh();
    if (text == "relu") return ActivationKind::relu();
    if (text == "gaussian") return ActivationKind::gaussian(1.0);
    if (text.rfind("gaussian:", 0) == 0) return ActivationKind::gaussian(std::stod(text.substr(9)));
    throw std::invalid_argument("unknown activation '" + text + "'");
}

PoolSpec PoolSpec::checked(int region, int stride, Mode mode) {
    if (region < 1 || stride < 1) throw std::invalid_argument("pool region and stride must be >= 1");
    return {region, stride, mode};
}

std::string to_string(PoolSpec::Mode mode) {
    switch (mode) {
        case PoolSpec::Mode::none: return "none";
        case PoolSpec::Mode::mean: return "mean";
        case PoolSpec::Mode::max: return "max";
    }
    return "unknown";
}

PoolSpec::Mode parse_pool_mode(const std::string& text) {
    if (text == "none") return PoolSpec::Mode::none;
    if (text == "mean") return PoolSpec::Mode::mean;
    if (text == "max") return PoolSpec::Mode::max;
    throw std::invalid_argument("unknown pool mode '" + text + "'");
}

int conv_output_dim(int input_dim, int kernel_dim, const ConvGeometry& geom) {
    const long span = static_cast<long>(input_dim) - kernel_dim + 2L * geom.padding;
    if (input_dim <= 0 || kernel_dim <= 0 || geom.stride <= 0 || geom.padding < 0 || span < 0 ||
        span % geom.stride != 0) {
        std::ostringstream msg;
        msg << "invalid convolution geometry: input=" << input_dim << " kernel=" << kernel_dim
            << " padding=" << geom.padding << " stride=" << geom.stride
            << " ((input - kernel + 2*padding) must be a non-negative multiple of stride)";
        throw std::invalid_argument(msg.str());
    }
    return static_cast<int>(span / geom.stride) + 1;
}

int pool_output_dim(int input_dim, const PoolSpec& spec) {
    if (spec.mode == PoolSpec::Mode::none) return input_dim;
    if (spec.region < 1 || spec.stride < 1 || input_dim < spec.region || (input_dim - spec.region) % spec.stride != 0) {
        std::ostringstream msg;
        msg << "pooling region " << spec.region << " with stride " << spec.stride << " does not tile input of side "
            << input_dim;
        throw std::invalid_argument(msg.str());
    }
    return (input_dim - spec.region) / spec.stride + 1;
}

ImageGrid zero_pad(const ImageGrid& input, int padding) {
    if (padding == 0) return input;
    ImageGrid out(input.height() + 2 * padding, input.width() + 2 * padding);
    for (int r = 0; r < input.height(); ++r) {
        const auto src = input.row(r);
        std::copy(src.begin(), src.end(), out.row(r + padding).begin() + padding);
    }
    return out;
}

namespace {

// The row-axpy formulation wins when output rows are longer than kernel rows
// (small kernels on large maps); the dot formulation wins otherwise.
bool prefer_row_axpy(int out_width, int kernel_size, const ConvGeometry& geom) {
    return geom.stride == 1 && out_width > kernel_size;
}

void check_kernel(const KernelView& kernel) {
    if (kernel.size <= 0 ||
        kernel.weights.size() != static_cast<std::size_t>(kernel.size) * static_cast<std::size_t>(kernel.size))
        throw std::invalid_argument("kernel weight count must be size^2");
}

}  // namespace

void conv2d_accumulate(const ImageGrid& input, const KernelView& kernel, const ConvGeometry& geom, ImageGrid& out) {
    check_kernel(kernel);
    const int out_h = conv_output_dim(input.height(), kernel.size, geom);
    const int out_w = conv_output_dim(input.width(), kernel.size, geom);
    if (out.height() != out_h || out.width() != out_w)
        throw std::invalid_argument("conv2d_accumulate: output grid has the wrong shape");

    const ImageGrid padded_storage = geom.padding > 0 ? zero_pad(input, geom.padding) : ImageGrid{};
    const ImageGrid& in = geom.padding > 0 ? padded_storage : input;
    const int k = kernel.size;
    const double* w = kernel.weights.data();

    if (prefer_row_axpy(out_w, k, geom)) {
        for (int u = 0; u < k; ++u)
            for (int v = 0; v < k; ++v) {
                const double wv = w[u * k + v];
                for (int i = 0; i < out_h; ++i)
                    simd::axpy(wv, in.row(i + u).data() + v, out.row(i).data(), static_cast<std::size_t>(out_w));
            }
        return;
    }
    const int s = geom.stride;
    for (int i = 0; i < out_h; ++i)
        for (int j = 0; j < out_w; ++j) {
            double sum = 0.0;
            for (int u = 0; u < k; ++u)
                sum += simd::dot(w + u * k, in.row(i * s + u).data() + j * s, static_cast<std::size_t>(k));
            out(i, j) += sum;
        }
}

ImageGrid conv2d(const ImageGrid& input, const KernelView& kernel, const ConvGeometry& geom) {
    check_kernel(kernel);
    ImageGrid out(conv_output_dim(input.height(), kernel.size, geom), conv_output_dim(input.width(), kernel.size, geom));
    conv2d_accumulate(input, kernel, geom, out);
    return out;
}

void conv2d_weight_grad(const ImageGrid& input, const ImageGrid& grad_out, int kernel_size, const ConvGeometry& geom,
                        std::span<double> grad_weights) {
    const int k = kernel_size;
    const int out_h = conv_output_dim(input.height(), k, geom);
    const int out_w = conv_output_dim(input.width(), k, geom);
    if (grad_out.height() != out_h || grad_out.width() != out_w)
        throw std::invalid_argument("conv2d_weight_grad: gradient grid has the wrong shape");
    if (grad_weights.size() != static_cast<std::size_t>(k) * static_cast<std::size_t>(k))
        throw std::invalid_argument("conv2d_weight_grad: gradient buffer must hold size^2 entries");

    const ImageGrid padded_storage = geom.padding > 0 ? zero_pad(input, geom.padding) : ImageGrid{};
    const ImageGrid& in = geom.padding > 0 ? padded_storage : input;
    double* gw = grad_weights.data();

    if (prefer_row_axpy(out_w, k, geom)) {
        for (int u = 0; u < k; ++u)
            for (int v = 0; v < k; ++v) {
                double sum = 0.0;
                for (int i = 0; i < out_h; ++i)
                    sum += simd::dot(grad_out.row(i).data(), in.row(i + u).data() + v, static_cast<std::size_t>(out_w));
                gw[u * k + v] += sum;
            }
        return;
    }
    const int s = geom.stride;
    for (int i = 0; i < out_h; ++i)
        for (int j = 0; j < out_w; ++j) {
            const double g = grad_out(i, j);
            for (int u = 0; u < k; ++u)
                simd::axpy(g, in.row(i * s + u).data() + j * s, gw + u * k, static_cast<std::size_t>(k));
        }
}

void conv2d_input_grad(const ImageGrid& grad_out, const KernelView& kernel, const ConvGeometry& geom,
                       ImageGrid& grad_input) {
    check_kernel(kernel);
    const int k = kernel.size;
    const int out_h = conv_output_dim(grad_input.height(), k, geom);
    const int out_w = conv_output_dim(grad_input.width(), k, geom);
    if (grad_out.height() != out_h || grad_out.width() != out_w)
        throw std::invalid_argument("conv2d_input_grad: gradient grid has the wrong shape");

    const int p = geom.padding;
    ImageGrid padded_storage =
        p > 0 ? ImageGrid(grad_input.height() + 2 * p, grad_input.width() + 2 * p) : ImageGrid{};
    ImageGrid& gin = p > 0 ? padded_storage : grad_input;
    const double* w = kernel.weights.data();

    if (prefer_row_axpy(out_w, k, geom)) {
        for (int u = 0; u < k; ++u)
            for (int v = 0; v < k; ++v) {
                const double wv = w[u * k + v];
                for (int i = 0; i < out_h; ++i)
                    simd::axpy(wv, grad_out.row(i).data(), gin.row(i + u).data() + v, static_cast<std::size_t>(out_w));
            }
    } else {
        const int s = geom.stride;
        for (int i = 0; i < out_h; ++i)
            for (int j = 0; j < out_w; ++j) {
                const double g = grad_out(i, j);
                for (int u = 0; u < k; ++u)
                    simd::axpy(g, w + u * k, gin.row(i * s + u).data() + j * s, static_cast<std::size_t>(k));
            }
    }

    if (p > 0) {
        for (int r = 0; r < grad_input.height(); ++r) {
            const auto src = gin.row(r + p).subspan(static_cast<std::size_t>(p), static_cast<std::size_t>(grad_input.width()));
            auto dst = grad_input.row(r);
            for (std::size_t c = 0; c < dst.size(); ++c) dst[c] += src[c];
        }
    }
}

double activate(double x, const ActivationKind& act) noexcept {
    switch (act.variant) {
        case ActivationKind::Variant::tanh: return std::tanh(x);
        case ActivationKind::Variant::relu: return x > 0.0 ? x : 0.0;
        case ActivationKind::Variant::gaussian: return std::exp(-x * x) / (act.sigma * act.sigma);
    }
    return x;
}

double activate_derivative(double x, const ActivationKind& act) noexcept {
    switch (act.variant) {
        case ActivationKind::Variant::tanh: {
            const double t = std::tanh(x);
            return 1.0 - t * t;
        }
        case ActivationKind::Variant::relu: return x > 0.0 ? 1.0 : 0.0;
        case ActivationKind::Variant::gaussian: return -2.0 * x * std::exp(-x * x) / (act.sigma * act.sigma);
    }
    return 1.0;
}

void activate(ImageGrid& grid, const ActivationKind& act) noexcept {
    for (double& v : grid.values()) v = activate(v, act);
}

std::vector<ImageGrid> conv_layer_forward(std::span<const ImageGrid> inputs, std::span<const KernelView> kernels,
                                          const ConvGeometry& geom, const ActivationKind& act) {
    if (inputs.empty()) throw std::invalid_argument("conv_layer_forward: no input maps");
    if (kernels.empty()) throw std::invalid_argument("conv_layer_forward: no kernels");
    for (const auto& in : inputs)
        if (!in.same_shape(inputs.front())) {
            std::ostringstream msg;
            msg << "conv_layer_forward: heterogeneous input maps (" << inputs.front().height() << "x"
                << inputs.front().width() << " vs " << in.height() << "x" << in.width() << ")";
            throw std::invalid_argument(msg.str());
        }
    for (const auto& kernel : kernels)
        if (kernel.size != kernels.front().size)
            throw std::invalid_argument("conv_layer_forward: kernels must share one size");

    const int out_h = conv_output_dim(inputs.front().height(), kernels.front().size, geom);
    const int out_w = conv_output_dim(inputs.front().width(), kernels.front().size, geom);
    std::vector<ImageGrid> outputs;
    outputs.reserve(kernels.size());
    for (const auto& kernel : kernels) {
        ImageGrid acc(out_h, out_w);
        for (const auto& in : inputs) conv2d_accumulate(in, kernel, geom, acc);
        for (double& v : acc.values()) v = activate(v + kernel.bias, act);
        outputs.push_back(std::move(acc));
    }
    return outputs;
}

std::vector<ImageGrid> conv_layer_forward(std::span<const ImageGrid> inputs, std::span<const Kernel> kernels,
                                          const ConvGeometry& geom, const ActivationKind& act) {
    std::vector<KernelView> views;
    views.reserve(kernels.size());
    for (const auto& kernel : kernels) views.push_back(kernel.view());
    return conv_layer_forward(inputs, std::span<const KernelView>(views), geom, act);
}

ImageGrid pool(const ImageGrid& input, const PoolSpec& spec) {
    if (spec.mode == PoolSpec::Mode::none) return input;
    const int out_h = pool_output_dim(input.height(), spec);
    const int out_w = pool_output_dim(input.width(), spec);
    ImageGrid out(out_h, out_w);
    const double area = static_cast<double>(spec.region) * spec.region;
    for (int i = 0; i < out_h; ++i)
        for (int j = 0; j < out_w; ++j) {
            double sum = 0.0;
            double best = input(i * spec.stride, j * spec.stride);
            for (int u = 0; u < spec.region; ++u)
                for (int v = 0; v < spec.region; ++v) {
                    const double x = input(i * spec.stride + u, j * spec.stride + v);
                    sum += x;
                    best = std::max(best, x);
                }
            out(i, j) = spec.mode == PoolSpec::Mode::mean ? sum / area : best;
        }
    return out;
}

ImageGrid pool_backward(const ImageGrid& input, const ImageGrid& grad_out, const PoolSpec& spec) {
    if (spec.mode == PoolSpec::Mode::none) return grad_out;
    const int out_h = pool_output_dim(input.height(), spec);
    const int out_w = pool_output_dim(input.width(), spec);
    if (grad_out.height() != out_h || grad_out.width() != out_w)
        throw std::invalid_argument("pool_backward: gradient grid has the wrong shape");
    ImageGrid grad_in(input.height(), input.width());
    const double area = static_cast<double>(spec.region) * spec.region;
    for (int i = 0; i < out_h; ++i)
        for (int j = 0; j < out_w; ++j) {
            const double g = grad_out(i, j);
            if (spec.mode == PoolSpec::Mode::mean) {
                for (int u = 0; u < spec.region; ++u)
                    for (int v = 0; v < spec.region; ++v) grad_in(i * spec.stride + u, j * spec.stride + v) += g / area;
                continue;
            }
            int best_r = i * spec.stride;
            int best_c = j * spec.stride;
            for (int u = 0; u < spec.region; ++u)
                for (int v = 0; v < spec.region; ++v) {
                    const int r = i * spec.stride + u;
                    const int c = j * spec.stride + v;
                    if (input(r, c) > input(best_r, best_c)) {
                        best_r = r;
                        best_c = c;
                    }
                }
            grad_in(best_r, best_c) += g;
        }
    return grad_in;
}

}  // namespace stegcnn
