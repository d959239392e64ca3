#pragma once

// Corpus synthesis, normalization and train/test assembly.

#include <cstdint>
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "stegcnn/stego.hpp"
#include "stegcnn/tensor.hpp"

namespace stegcnn {

struct Sample {
    ImageGrid image;
    int label = 0;  // 0 cover, 1 stego
    std::uint64_t source_id = 0;
};

/// Global intensity statistics applied as x -> (x/255 - mean) / std.
struct NormalizationStats {
    double mean = 0.0;
    double std = 1.0;

    friend bool operator==(const NormalizationStats&, const NormalizationStats&) = default;
};

struct Corpus {
    std::vector<Sample> items;
    NormalizationStats stats{};
    bool normalized = false;

    std::size_t size() const noexcept { return items.size(); }
    bool empty() const noexcept { return items.empty(); }
};

/// Deterministic textured 8-bit grayscale cover. Each image depends only on
/// (seed, index, size), so covers can be generated independently.
ImageGrid synth_cover(std::uint64_t seed, std::uint64_t index, int size);
std::vector<ImageGrid> synth_covers(std::uint64_t seed, std::size_t count, int size);

/// Population mean/std of x/255 over every pixel of every image in the corpus.
/// Throws on an empty corpus or zero deviation.
NormalizationStats compute_stats(const Corpus& raw);

/// Normalizes with the corpus' own statistics. Throws if already normalized.
Corpus normalize(Corpus raw);

/// Normalizes with externally supplied statistics (test data reuses training stats).
Corpus normalize_with(Corpus raw, const NormalizationStats& stats);

struct SplitIndices {
    std::vector<std::size_t> train;  // pair indices
    std::vector<std::size_t> test;
};

/// Seeded shuffle of pair indices; the first round(ratio * pairs) go to training.
SplitIndices split_pairs(std::size_t pairs, double train_ratio, std::uint64_t seed);

/// Raw (unnormalized) corpus holding cover and stego of each listed pair; pair
/// i gets source_id i.
Corpus paired_corpus(const std::vector<ImageGrid>& covers, const std::vector<ImageGrid>& stegos,
                     const std::vector<std::size_t>& pairs);

/// Pairs covers with stegos, splits without separating twins, normalizes the
/// training side and the test side with the training statistics.
std::pair<Corpus, Corpus> assemble(const std::vector<ImageGrid>& covers, const std::vector<ImageGrid>& stegos,
                                   double train_ratio, std::uint64_t seed);

// ---------------------------------------------------------------- manifests

/// One line of a corpus manifest: "<path> <label> <source_id>".
struct ManifestEntry {
    std::string path;
    int label = 0;
    std::uint64_t source_id = 0;

    friend bool operator==(const ManifestEntry&, const ManifestEntry&) = default;
};

/// Writes entries after '#'-prefixed header lines.
void write_corpus_manifest(const std::filesystem::path& path, const std::vector<ManifestEntry>& entries,
                           const std::vector<std::string>& header);
std::vector<ManifestEntry> read_corpus_manifest(const std::filesystem::path& path);

/// One line of a batch embedding manifest:
/// "<cover_path> <algorithm> <alpha> <fixed|per_image>:<seed> <output_path>".
struct BatchRecord {
    std::string cover_path;
    StegoAlgorithm algorithm = StegoAlgorithm::lsb_matching;
    double payload = 0.0;
    KeyMode key_mode = KeyMode::fixed;
    std::uint64_t key_seed = 0;
    std::string output_path;
};

std::vector<BatchRecord> read_batch_manifest(const std::filesystem::path& path);
void write_batch_manifest(const std::filesystem::path& path, const std::vector<BatchRecord>& records,
                          const std::vector<std::string>& header);

}  // namespace stegcnn
