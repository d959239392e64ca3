#pragma once

// Elementary 2D operations: convolution, activation, pooling.
//
// NOTE: "convolution" here is cross-correlation, i.e. the kernel is NOT
// flipped: out(i,j) = sum_{u,v} w(u,v) * in(i*S + u - P, j*S + v - P).
// This is the convention of mainstream deep-learning toolkits; since kernels
// are learned, the flipped variant is the same model under a re-indexing of
// the weights. Padding cells read as exactly 0.0.

#include <cstddef>
#include <span>
#include <string>
#include <vector>

namespace stegcnn {

/// 2D grid of doubles in row-major order (an image or a feature map).
class ImageGrid {
public:
    ImageGrid() = default;
    /// Zero-filled grid.
    ImageGrid(int height, int width);
    /// Grid from row-major values. Throws if the size does not match or any
    /// value is not finite.
    ImageGrid(int height, int width, std::vector<double> values);

    static ImageGrid filled(int height, int width, double value);

    int height() const noexcept { return height_; }
    int width() const noexcept { return width_; }
    std::size_t size() const noexcept { return values_.size(); }
    bool empty() const noexcept { return values_.empty(); }

    double& operator()(int row, int col) noexcept { return values_[index(row, col)]; }
    double operator()(int row, int col) const noexcept { return values_[index(row, col)]; }

    std::span<double> row(int r) noexcept { return {values_.data() + index(r, 0), static_cast<std::size_t>(width_)}; }
    std::span<const double> row(int r) const noexcept {
        return {values_.data() + index(r, 0), static_cast<std::size_t>(width_)};
    }

    std::span<double> values() noexcept { return values_; }
    std::span<const double> values() const noexcept { return values_; }

    bool same_shape(const ImageGrid& other) const noexcept {
        return height_ == other.height_ && width_ == other.width_;
    }

    friend bool operator==(const ImageGrid&, const ImageGrid&) = default;

private:
    std::size_t index(int row, int col) const noexcept {
        return static_cast<std::size_t>(row) * static_cast<std::size_t>(width_) + static_cast<std::size_t>(col);
    }

    int height_ = 0;
    int width_ = 0;
    std::vector<double> values_;
};

/// Non-owning square kernel: `size * size` row-major weights plus a bias.
struct KernelView {
    int size = 0;
    std::span<const double> weights;
    double bias = 0.0;
};

/// Owning square kernel.
struct Kernel {
    int size = 0;
    std::vector<double> weights;
    double bias = 0.0;

    Kernel() = default;
    Kernel(int size, std::vector<double> weights, double bias = 0.0);

    KernelView view() const noexcept { return {size, weights, bias}; }
};

struct ConvGeometry {
    int stride = 1;
    int padding = 0;

    friend bool operator==(const ConvGeometry&, const ConvGeometry&) = default;
};

struct ActivationKind {
    enum class Variant { tanh, relu, gaussian };

    Variant variant = Variant::tanh;
    double sigma = 1.0;  // gaussian only

    static ActivationKind tanh() noexcept { return {Variant::tanh, 1.0}; }
    static ActivationKind relu() noexcept { return {Variant::relu, 1.0}; }
    static ActivationKind gaussian(double sigma = 1.0);

    friend bool operator==(const ActivationKind&, const ActivationKind&) = default;
};

std::string to_string(const ActivationKind& act);
ActivationKind parse_activation(const std::string& text);

struct PoolSpec {
    enum class Mode { none, mean, max };

    int region = 1;
    int stride = 1;
    Mode mode = Mode::none;

    static PoolSpec none() noexcept { return {1, 1, Mode::none}; }
    static PoolSpec mean(int region, int stride) { return checked(region, stride, Mode::mean); }
    static PoolSpec max(int region, int stride) { return checked(region, stride, Mode::max); }

    friend bool operator==(const PoolSpec&, const PoolSpec&) = default;

private:
    static PoolSpec checked(int region, int stride, Mode mode);
};

std::string to_string(PoolSpec::Mode mode);
PoolSpec::Mode parse_pool_mode(const std::string& text);

/// Output side of a convolution: (in - k + 2P)/S + 1. Throws
/// std::invalid_argument naming all four quantities when the result is not a
/// positive integer.
int conv_output_dim(int input_dim, int kernel_dim, const ConvGeometry& geom);

/// Output side of a pooling pass; throws when the windows do not tile the
/// input exactly.
int pool_output_dim(int input_dim, const PoolSpec& spec);

/// Cross-correlation of one grid with one kernel. Bias is not added.
ImageGrid conv2d(const ImageGrid& input, const KernelView& kernel, const ConvGeometry& geom);
inline ImageGrid conv2d(const ImageGrid& input, const Kernel& kernel, const ConvGeometry& geom) {
    return conv2d(input, kernel.view(), geom);
}

/// Adds conv2d(input, kernel) into `out` (which must already have the output shape).
void conv2d_accumulate(const ImageGrid& input, const KernelView& kernel, const ConvGeometry& geom, ImageGrid& out);

/// Weight gradient of a convolution: grad_w(u,v) += sum_{i,j} grad_out(i,j) * in_pad(i*S+u, j*S+v).
/// `grad_weights` has kernel_size^2 entries.
void conv2d_weight_grad(const ImageGrid& input, const ImageGrid& grad_out, int kernel_size, const ConvGeometry& geom,
                        std::span<double> grad_weights);

/// Input gradient of a convolution, accumulated into `grad_input` (input shape).
void conv2d_input_grad(const ImageGrid& grad_out, const KernelView& kernel, const ConvGeometry& geom,
                       ImageGrid& grad_input);

double activate(double x, const ActivationKind& act) noexcept;
double activate_derivative(double x, const ActivationKind& act) noexcept;

/// Applies the activation in place.
void activate(ImageGrid& grid, const ActivationKind& act) noexcept;

/// One convolutional layer: output k = f(sum_m conv2d(inputs[m], kernels[k]) + bias_k).
/// The same kernel is applied to every incoming map. All inputs must share a
/// shape and all kernels a size.
std::vector<ImageGrid> conv_layer_forward(std::span<const ImageGrid> inputs, std::span<const KernelView> kernels,
                                          const ConvGeometry& geom, const ActivationKind& act);
std::vector<ImageGrid> conv_layer_forward(std::span<const ImageGrid> inputs, std::span<const Kernel> kernels,
                                          const ConvGeometry& geom, const ActivationKind& act);

ImageGrid pool(const ImageGrid& input, const PoolSpec& spec);

/// Routes the gradient of a pooling pass back to its input. `input` is the
/// pre-pooling grid (needed for max routing; ties go to the first maximum in
/// row-major order).
ImageGrid pool_backward(const ImageGrid& input, const ImageGrid& grad_out, const PoolSpec& spec);

/// Copy of `input` surrounded by `padding` rows/columns of zeros.
ImageGrid zero_pad(const ImageGrid& input, int padding);

}  // namespace stegcnn
