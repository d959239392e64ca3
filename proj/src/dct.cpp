#include "stegcnn/dct.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

namespace stegcnn::dct {

namespace {

// basis[u][x] = c(u) cos((2x + 1) u pi / 16)
const std::array<std::array<double, 8>, 8>& basis() {
    static const auto table = [] {
        std::array<std::array<double, 8>, 8> b{};
        for (int u = 0; u < 8; ++u) {
            const double c = u == 0 ? std::sqrt(1.0 / 8.0) : std::sqrt(2.0 / 8.0);
            for (int x = 0; x < 8; ++x) b[u][x] = c * std::cos((2 * x + 1) * u * std::numbers::pi / 16.0);
        }
        return b;
    }();
    return table;
}

constexpr QuantTable base_luminance = {
    16, 11, 10, 16, 24,  40,  51,  61,   //
    12, 12, 14, 19, 26,  58,  60,  55,   //
    14, 13, 16, 24, 40,  57,  69,  56,   //
    14, 17, 22, 29, 51,  87,  80,  62,   //
    18, 22, 37, 56, 68,  109, 103, 77,   //
    24, 35, 55, 64, 81,  104, 113, 92,   //
    49, 64, 78, 87, 103, 121, 120, 101,  //
    72, 92, 95, 98, 112, 100, 103, 99,
};

void check_blocks(int height, int width) {
    if (height <= 0 || width <= 0 || height % 8 != 0 || width % 8 != 0)
        throw std::invalid_argument("image sides must be positive multiples of 8 for block DCT (got " +
                                    std::to_string(height) + "x" + std::to_string(width) + ")");
}

}  // namespace

Block forward(const Block& pixels) noexcept {
    const auto& b = basis();
    Block tmp{};
    Block out{};
    // rows then columns
    for (int r = 0; r < 8; ++r)
        for (int v = 0; v < 8; ++v) {
            double s = 0.0;
            for (int x = 0; x < 8; ++x) s += b[v][x] * pixels[r * 8 + x];
            tmp[r * 8 + v] = s;
        }
    for (int u = 0; u < 8; ++u)
        for (int v = 0; v < 8; ++v) {
            double s = 0.0;
            for (int y = 0; y < 8; ++y) s += b[u][y] * tmp[y * 8 + v];
            out[u * 8 + v] = s;
        }
    return out;
}

Block inverse(const Block& coefficients) noexcept {
    const auto& b = basis();
    Block tmp{};
    Block out{};
    for (int u = 0; u < 8; ++u)
        for (int x = 0; x < 8; ++x) {
            double s = 0.0;
            for (int v = 0; v < 8; ++v) s += b[v][x] * coefficients[u * 8 + v];
            tmp[u * 8 + x] = s;
        }
    for (int y = 0; y < 8; ++y)
        for (int x = 0; x < 8; ++x) {
            double s = 0.0;
            for (int u = 0; u < 8; ++u) s += b[u][y] * tmp[u * 8 + x];
            out[y * 8 + x] = s;
        }
    return out;
}

QuantTable luminance_table(int quality) {
    if (quality < 1 || quality > 100) throw std::invalid_argument("JPEG quality must be in 1..100");
    const int scale = quality < 50 ? 5000 / quality : 200 - 2 * quality;
    QuantTable table{};
    for (std::size_t i = 0; i < 64; ++i) table[i] = std::clamp((base_luminance[i] * scale + 50) / 100, 1, 255);
    return table;
}

std::vector<int> quantize_image(const ImageGrid& image, const QuantTable& table) {
    check_blocks(image.height(), image.width());
    std::vector<int> coefficients(image.size(), 0);
    const int w = image.width();
    for (int bi = 0; bi < image.height(); bi += 8)
        for (int bj = 0; bj < w; bj += 8) {
            Block block{};
            for (int y = 0; y < 8; ++y)
                for (int x = 0; x < 8; ++x) block[static_cast<std::size_t>(y * 8 + x)] = image(bi + y, bj + x) - 128.0;
            const Block c = forward(block);
            for (int u = 0; u < 8; ++u)
                for (int v = 0; v < 8; ++v) {
                    const auto i = static_cast<std::size_t>(u * 8 + v);
                    coefficients[static_cast<std::size_t>((bi + u) * w + bj + v)] =
                        static_cast<int>(std::lround(c[i] / table[i]));
                }
        }
    return coefficients;
}

ImageGrid reconstruct_image(const std::vector<int>& coefficients, int height, int width, const QuantTable& table) {
    check_blocks(height, width);
    if (coefficients.size() != static_cast<std::size_t>(height) * static_cast<std::size_t>(width))
        throw std::invalid_argument("coefficient count does not match image size");
    ImageGrid image(height, width);
    for (int bi = 0; bi < height; bi += 8)
        for (int bj = 0; bj < width; bj += 8) {
            Block c{};
            for (int u = 0; u < 8; ++u)
                for (int v = 0; v < 8; ++v) {
                    const auto i = static_cast<std::size_t>(u * 8 + v);
                    c[i] = static_cast<double>(coefficients[static_cast<std::size_t>((bi + u) * width + bj + v)]) * table[i];
                }
            const Block px = inverse(c);
            for (int y = 0; y < 8; ++y)
                for (int x = 0; x < 8; ++x)
                    image(bi + y, bj + x) = std::clamp(std::round(px[static_cast<std::size_t>(y * 8 + x)] + 128.0), 0.0, 255.0);
        }
    return image;
}

ImageGrid recompress(const ImageGrid& image, int quality) {
    const QuantTable table = luminance_table(quality);
    return reconstruct_image(quantize_image(image, table), image.height(), image.width(), table);
}

}  // namespace stegcnn::dct
