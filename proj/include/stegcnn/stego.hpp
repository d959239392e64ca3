#pragma once

// Embedding simulators producing stego images from 8-bit grayscale covers.
//
// Key semantics. An embedding key seeds two streams: a Fisher-Yates
// permutation of the pixel (or coefficient) positions, and the stream of +/-1
// change directions consumed in visit order. Under KeyMode::fixed every image
// reuses the same key, so the visited positions and the direction chosen at
// each of them are identical across the corpus; only whether a change is
// needed (cover LSB vs message bit) varies. Under KeyMode::per_image each image
// gets mix_seed(master, image_index). Message bits always come from
// mix_seed(message_seed, image_index).
//
// No syndrome coding is simulated: each visited position changes with
// probability 1/2.

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "stegcnn/tensor.hpp"

namespace stegcnn {

enum class StegoAlgorithm { lsb_matching, adaptive_cost, dct_lsb };
enum class KeyMode { fixed, per_image };

std::string to_string(StegoAlgorithm algorithm);
StegoAlgorithm parse_algorithm(const std::string& text);
std::string to_string(KeyMode mode);
KeyMode parse_key_mode(const std::string& text);

struct StegoConfig {
    StegoAlgorithm algorithm = StegoAlgorithm::lsb_matching;
    /// bits per pixel (spatial) or bits per non-zero AC coefficient (dct_lsb)
    double payload = 0.4;
    KeyMode key_mode = KeyMode::fixed;
    /// the key itself (fixed) or the master seed keys are derived from (per_image)
    std::uint64_t key_seed = 1;
    std::uint64_t message_seed = 1;

    void validate() const;
};

struct EmbedResult {
    ImageGrid stego;
    std::size_t modified_count = 0;
    std::size_t positions_used = 0;
    /// Visited positions in visit order: pixel indices (row-major) for the
    /// spatial algorithms, coefficient indices in the same grid layout for dct_lsb.
    std::vector<std::size_t> visited;
    /// Message bit embedded at each visited position.
    std::vector<std::uint8_t> message;
    /// dct_lsb only: the cover recompressed without embedding; modified_count
    /// is measured against it.
    ImageGrid baseline;
};

/// Key used for image `image_index` under `cfg`.
std::uint64_t embedding_key(const StegoConfig& cfg, std::uint64_t image_index) noexcept;

/// Number of positions visited for payload alpha over `capacity` positions: ceil(alpha * capacity).
std::size_t payload_positions(double alpha, std::size_t capacity);

/// Throws std::invalid_argument unless every value is an integer in [0, 255].
void check_cover(const ImageGrid& cover);

EmbedResult embed_lsb_matching(const ImageGrid& cover, const StegoConfig& cfg, std::uint64_t image_index = 0);
EmbedResult embed_adaptive(const ImageGrid& cover, const StegoConfig& cfg, std::uint64_t image_index = 0);
EmbedResult embed_dct(const ImageGrid& cover, const StegoConfig& cfg, std::uint64_t image_index = 0);

/// Dispatches on cfg.algorithm.
EmbedResult embed(const ImageGrid& cover, const StegoConfig& cfg, std::uint64_t image_index = 0);

/// Number of coordinates where the two grids differ.
std::size_t count_modified(const ImageGrid& cover, const ImageGrid& stego);

/// Per-pixel embedding cost of the adaptive simulator: 1 / (local 3x3 variance + 1e-6),
/// the window clipped at the borders.
std::vector<double> adaptive_costs(const ImageGrid& cover);

inline constexpr double adaptive_cost_epsilon = 1e-6;

}  // namespace stegcnn
