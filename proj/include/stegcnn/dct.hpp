#pragma once

// 8x8 orthonormal DCT-II and baseline-JPEG style quantization.

#include <array>
#include <vector>

#include "stegcnn/tensor.hpp"

namespace stegcnn::dct {

using Block = std::array<double, 64>;
using QuantTable = std::array<int, 64>;

/// Orthonormal 2D DCT-II of a row-major 8x8 block.
Block forward(const Block& pixels) noexcept;
/// Inverse of forward().
Block inverse(const Block& coefficients) noexcept;

/// Standard JPEG luminance table scaled to `quality` (1..100) with the IJG rule.
QuantTable luminance_table(int quality);

/// Quantized coefficients of a whole image laid out like the pixel grid:
/// coefficient (u, v) of block (bi, bj) sits at (8*bi + u, 8*bj + v).
/// Pixels are level-shifted by -128 before the transform.
std::vector<int> quantize_image(const ImageGrid& image, const QuantTable& table);

/// Dequantize, inverse transform, +128, round, clamp to [0, 255].
ImageGrid reconstruct_image(const std::vector<int>& coefficients, int height, int width, const QuantTable& table);

/// quantize_image followed by reconstruct_image.
ImageGrid recompress(const ImageGrid& image, int quality);

inline constexpr int default_quality = 75;

}  // namespace stegcnn::dct
