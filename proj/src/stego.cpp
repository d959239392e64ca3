#include "stegcnn/stego.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "stegcnn/dct.hpp"
#include "stegcnn/rng.hpp"

namespace stegcnn {

std::string to_string(StegoAlgorithm algorithm) {
    switch (algorithm) {
        case StegoAlgorithm::lsb_matching: return "lsb_matching";
        case StegoAlgorithm::adaptive_cost: return "adaptive_cost";
        case StegoAlgorithm::dct_lsb: return "dct_lsb";
    }
    return "unknown";
}

StegoAlgorithm parse_algorithm(const std::string& text) {
    if (text == "lsb_matching") return StegoAlgorithm::lsb_matching;
    if (text == "adaptive_cost") return StegoAlgorithm::adaptive_cost;
    if (text == "dct_lsb") return StegoAlgorithm::dct_lsb;
    throw std::invalid_argument("unknown embedding algorithm '" + text + "'");
}

std::string to_string(KeyMode mode) { return mode == KeyMode::fixed ? "fixed" : "per_image"; }

KeyMode parse_key_mode(const std::string& text) {
    if (text == "fixed") return KeyMode::fixed;
    if (text == "per_image") return KeyMode::per_image;
    throw std::invalid_argument("unknown key mode '" + text + "'");
}

void StegoConfig::validate() const {
    if (!(payload >= 0.0 && payload <= 1.0)) throw std::invalid_argument("payload must lie in [0, 1]");
}

std::uint64_t embedding_key(const StegoConfig& cfg, std::uint64_t image_index) noexcept {
    return cfg.key_mode == KeyMode::fixed ? cfg.key_seed : mix_seed(cfg.key_seed, image_index);
}

std::size_t payload_positions(double alpha, std::size_t capacity) {
    if (!(alpha >= 0.0 && alpha <= 1.0)) throw std::invalid_argument("payload must lie in [0, 1]");
    const double x = alpha * static_cast<double>(capacity);
    const double nearest = std::round(x);
    // alpha * capacity that is an integer up to representation error counts as that integer
    if (std::abs(x - nearest) <= 1e-9 * std::max(1.0, x)) return static_cast<std::size_t>(nearest);
    return std::min(capacity, static_cast<std::size_t>(std::ceil(x)));
}

void check_cover(const ImageGrid& cover) {
    for (double v : cover.values())
        if (!(v >= 0.0 && v <= 255.0) || v != std::floor(v))
            throw std::invalid_argument("cover values must be integers in [0, 255]");
}

namespace {

// Stream indices under one key.
constexpr std::uint64_t permutation_stream = 0;
constexpr std::uint64_t direction_stream = 1;

struct Streams {
    Streams(const StegoConfig& cfg, std::uint64_t image_index)
        : key{embedding_key(cfg, image_index)},
          directions{mix_seed(key, direction_stream)},
          message{mix_seed(cfg.message_seed, image_index)} {}

    std::uint64_t key;
    Xoshiro256 directions;
    Xoshiro256 message;

    KeyedPermutation permutation(std::size_t n) const { return KeyedPermutation(mix_seed(key, permutation_stream), n); }
};

// LSB matching at the given pixels, in order.
EmbedResult lsb_match_positions(const ImageGrid& cover, std::vector<std::size_t> visited, Streams& streams) {
    EmbedResult result;
    result.stego = cover;
    auto values = result.stego.values();
    result.message.reserve(visited.size());
    for (const std::size_t pos : visited) {
        const auto bit = static_cast<std::uint8_t>(streams.message.bit());
        const double direction = streams.directions.bit() ? 1.0 : -1.0;
        result.message.push_back(bit);
        const auto pixel = static_cast<int>(values[pos]);
        if ((pixel & 1) == bit) continue;
        double changed = values[pos] + direction;
        if (changed < 0.0) changed = 1.0;
        if (changed > 255.0) changed = 254.0;
        values[pos] = changed;
        ++result.modified_count;
    }
    result.positions_used = visited.size();
    result.visited = std::move(visited);
    return result;
}

void require(const StegoConfig& cfg, StegoAlgorithm algorithm) {
    cfg.validate();
    if (cfg.algorithm != algorithm)
        throw std::invalid_argument("embedder called with algorithm " + to_string(cfg.algorithm));
}

}  // namespace

EmbedResult embed_lsb_matching(const ImageGrid& cover, const StegoConfig& cfg, std::uint64_t image_index) {
    require(cfg, StegoAlgorithm::lsb_matching);
    check_cover(cover);
    Streams streams(cfg, image_index);
    auto permutation = streams.permutation(cover.size());
    return lsb_match_positions(cover, permutation.prefix(payload_positions(cfg.payload, cover.size())), streams);
}

std::vector<double> adaptive_costs(const ImageGrid& cover) {
    const int h = cover.height();
    const int w = cover.width();
    std::vector<double> costs(cover.size());
    for (int r = 0; r < h; ++r)
        for (int c = 0; c < w; ++c) {
            double sum = 0.0;
            double sum_sq = 0.0;
            int n = 0;
            for (int dr = -1; dr <= 1; ++dr)
                for (int dc = -1; dc <= 1; ++dc) {
                    const int rr = r + dr;
                    const int cc = c + dc;
                    if (rr < 0 || rr >= h || cc < 0 || cc >= w) continue;
                    const double x = cover(rr, cc);
                    sum += x;
                    sum_sq += x * x;
                    ++n;
                }
            const double mean = sum / n;
            const double variance = std::max(0.0, sum_sq / n - mean * mean);
            costs[static_cast<std::size_t>(r) * static_cast<std::size_t>(w) + static_cast<std::size_t>(c)] =
                1.0 / (variance + adaptive_cost_epsilon);
        }
    return costs;
}

EmbedResult embed_adaptive(const ImageGrid& cover, const StegoConfig& cfg, std::uint64_t image_index) {
    require(cfg, StegoAlgorithm::adaptive_cost);
    check_cover(cover);
    Streams streams(cfg, image_index);
    const std::vector<double> costs = adaptive_costs(cover);
    auto permutation = streams.permutation(cover.size());
    std::vector<std::size_t> order = permutation.full();
    // Cheapest first; equal costs keep key order.
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return costs[a] < costs[b]; });
    order.resize(payload_positions(cfg.payload, cover.size()));
    return lsb_match_positions(cover, std::move(order), streams);
}

EmbedResult embed_dct(const ImageGrid& cover, const StegoConfig& cfg, std::uint64_t image_index) {
    require(cfg, StegoAlgorithm::dct_lsb);
    if (cover.height() % 8 != 0 || cover.width() % 8 != 0)
        throw std::invalid_argument("dct_lsb needs image sides divisible by 8 (got " + std::to_string(cover.height()) +
                                    "x" + std::to_string(cover.width()) + ")");
    check_cover(cover);
    const dct::QuantTable table = dct::luminance_table(dct::default_quality);
    std::vector<int> coefficients = dct::quantize_image(cover, table);
    const auto w = static_cast<std::size_t>(cover.width());

    auto is_usable = [&](std::size_t pos) {
        const std::size_t r = pos / w;
        const std::size_t c = pos % w;
        const bool dc = r % 8 == 0 && c % 8 == 0;
        return !dc && coefficients[pos] != 0;
    };
    std::size_t nonzero_ac = 0;
    for (std::size_t pos = 0; pos < coefficients.size(); ++pos)
        if (is_usable(pos)) ++nonzero_ac;

    EmbedResult result;
    result.baseline = dct::reconstruct_image(coefficients, cover.height(), cover.width(), table);
    const std::size_t target = payload_positions(cfg.payload, nonzero_ac);

    Streams streams(cfg, image_index);
    auto permutation = streams.permutation(coefficients.size());
    result.visited.reserve(target);
    result.message.reserve(target);
    for (std::size_t i = 0; i < permutation.size() && result.visited.size() < target; ++i) {
        const std::size_t pos = permutation[i];
        if (!is_usable(pos)) continue;
        const auto bit = static_cast<std::uint8_t>(streams.message.bit());
        const int direction = streams.directions.bit() ? 1 : -1;
        result.visited.push_back(pos);
        result.message.push_back(bit);
        int& coef = coefficients[pos];
        if ((std::abs(coef) & 1) == bit) continue;
        // +/-1 keeps the coefficient non-zero: a step onto zero goes the other way.
        coef = coef + direction == 0 ? coef - direction : coef + direction;
    }
    result.positions_used = result.visited.size();
    result.stego = dct::reconstruct_image(coefficients, cover.height(), cover.width(), table);
    result.modified_count = count_modified(result.baseline, result.stego);
    return result;
}

EmbedResult embed(const ImageGrid& cover, const StegoConfig& cfg, std::uint64_t image_index) {
    switch (cfg.algorithm) {
        case StegoAlgorithm::lsb_matching: return embed_lsb_matching(cover, cfg, image_index);
        case StegoAlgorithm::adaptive_cost: return embed_adaptive(cover, cfg, image_index);
        case StegoAlgorithm::dct_lsb: return embed_dct(cover, cfg, image_index);
    }
    throw std::invalid_argument("unknown embedding algorithm");
}

std::size_t count_modified(const ImageGrid& cover, const ImageGrid& stego) {
    if (!cover.same_shape(stego))
        throw std::invalid_argument("count_modified: grids differ in shape (" + std::to_string(cover.height()) + "x" +
                                    std::to_string(cover.width()) + " vs " + std::to_string(stego.height()) + "x" +
                                    std::to_string(stego.width()) + ")");
    const auto a = cover.values();
    const auto b = stego.values();
    std::size_t count = 0;
    for (std::size_t i = 0; i < a.size(); ++i)
        if (a[i] != b[i]) ++count;
    return count;
}

}  // namespace stegcnn
