#include "stegcnn/dataset.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <fstream>
#include <numbers>
#include <sstream>
#include <stdexcept>

#include "stegcnn/rng.hpp"

namespace stegcnn {

ImageGrid synth_cover(std::uint64_t seed, std::uint64_t index, int size) {
    if (size < 8) throw std::invalid_argument("synthetic covers need size >= 8");
    Xoshiro256 rng{mix_seed(seed, index)};
    const double n = size;
    std::vector<double> px(static_cast<std::size_t>(size) * static_cast<std::size_t>(size));
    auto at = [&](int r, int c) -> double& { return px[static_cast<std::size_t>(r) * static_cast<std::size_t>(size) + static_cast<std::size_t>(c)]; };

    // Low-frequency content: a base level, a linear gradient and two slow waves.
    const double base = rng.uniform(123.0, 133.0);
    const double gx = rng.uniform(-10.0, 10.0) / n;
    const double gy = rng.uniform(-10.0, 10.0) / n;
    struct Wave {
        double amp, fx, fy, phase;
    };
    std::array<Wave, 2> waves{};
    for (auto& w : waves) {
        const double freq = rng.uniform(0.5, 2.0) / n;
        const double angle = rng.uniform(0.0, 2.0 * std::numbers::pi);
        w = {rng.uniform(0.0, 5.0), freq * std::cos(angle), freq * std::sin(angle), rng.uniform(0.0, 2.0 * std::numbers::pi)};
    }
    for (int r = 0; r < size; ++r)
        for (int c = 0; c < size; ++c) {
            double v = base + gx * (c - n / 2) + gy * (r - n / 2);
            for (const auto& w : waves) v += w.amp * std::sin(2.0 * std::numbers::pi * (w.fx * c + w.fy * r) + w.phase);
            at(r, c) = v;
        }

    // Band-limited texture: white noise through a separable [1 2 1]/4 blur,
    // rescaled to a per-image amplitude.
    const double sigma = rng.uniform(2.0, 4.0);
    std::vector<double> noise(px.size());
    for (double& x : noise) x = rng.normal();
    std::vector<double> tmp(px.size());
    auto idx = [&](int r, int c) { return static_cast<std::size_t>(std::clamp(r, 0, size - 1)) * static_cast<std::size_t>(size) + static_cast<std::size_t>(std::clamp(c, 0, size - 1)); };
    for (int r = 0; r < size; ++r)
        for (int c = 0; c < size; ++c) tmp[idx(r, c)] = 0.25 * noise[idx(r, c - 1)] + 0.5 * noise[idx(r, c)] + 0.25 * noise[idx(r, c + 1)];
    constexpr double blur_gain = 0.375;  // std of the blurred unit noise: (sqrt(6)/4)^2
    for (int r = 0; r < size; ++r)
        for (int c = 0; c < size; ++c)
            at(r, c) += sigma / blur_gain * (0.25 * tmp[idx(r - 1, c)] + 0.5 * tmp[idx(r, c)] + 0.25 * tmp[idx(r + 1, c)]);

    // Flat patches: constant rectangles with no texture at all.
    const int patches = 1 + static_cast<int>(rng.below(3));
    for (int p = 0; p < patches; ++p) {
        const int ph = std::max(2, static_cast<int>(rng.uniform(n / 8, n / 3)));
        const int pw = std::max(2, static_cast<int>(rng.uniform(n / 8, n / 3)));
        const int r0 = static_cast<int>(rng.below(static_cast<std::uint64_t>(size - ph + 1)));
        const int c0 = static_cast<int>(rng.below(static_cast<std::uint64_t>(size - pw + 1)));
        const double level = std::round(rng.uniform(8.0, 248.0));
        for (int r = r0; r < r0 + ph; ++r)
            for (int c = c0; c < c0 + pw; ++c) at(r, c) = level;
    }

    for (double& v : px) v = std::clamp(std::round(v), 0.0, 255.0);
    return ImageGrid(size, size, std::move(px));
}

std::vector<ImageGrid> synth_covers(std::uint64_t seed, std::size_t count, int size) {
    std::vector<ImageGrid> covers;
    covers.reserve(count);
    for (std::size_t i = 0; i < count; ++i) covers.push_back(synth_cover(seed, i, size));
    return covers;
}

NormalizationStats compute_stats(const Corpus& raw) {
    if (raw.empty()) throw std::invalid_argument("cannot normalize an empty corpus");
    double sum = 0.0;
    std::size_t count = 0;
    for (const auto& s : raw.items) {
        for (double v : s.image.values()) sum += v / 255.0;
        count += s.image.size();
    }
    const double mean = sum / static_cast<double>(count);
    double sq = 0.0;
    for (const auto& s : raw.items)
        for (double v : s.image.values()) {
            const double d = v / 255.0 - mean;
            sq += d * d;
        }
    const double std = std::sqrt(sq / static_cast<double>(count));
    // Pixels are integers, so any real spread is far above rounding noise.
    if (!(std > 1e-9)) throw std::invalid_argument("degenerate corpus: intensity standard deviation is zero");
    return {mean, std};
}

Corpus normalize_with(Corpus raw, const NormalizationStats& stats) {
    if (raw.normalized) throw std::logic_error("corpus is already normalized");
    if (!(stats.std > 0.0)) throw std::invalid_argument("normalization std must be positive");
    for (auto& s : raw.items)
        for (double& v : s.image.values()) v = (v / 255.0 - stats.mean) / stats.std;
    raw.stats = stats;
    raw.normalized = true;
    return raw;
}

Corpus normalize(Corpus raw) {
    if (raw.normalized) throw std::logic_error("corpus is already normalized");
    const NormalizationStats stats = compute_stats(raw);
    return normalize_with(std::move(raw), stats);
}

SplitIndices split_pairs(std::size_t pairs, double train_ratio, std::uint64_t seed) {
    if (!(train_ratio >= 0.0 && train_ratio <= 1.0)) throw std::invalid_argument("split ratio must lie in [0, 1]");
    KeyedPermutation permutation(seed, pairs);
    const auto& order = permutation.full();
    const auto train_count = static_cast<std::size_t>(std::llround(train_ratio * static_cast<double>(pairs)));
    SplitIndices split;
    split.train.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(train_count));
    split.test.assign(order.begin() + static_cast<std::ptrdiff_t>(train_count), order.end());
    return split;
}

Corpus paired_corpus(const std::vector<ImageGrid>& covers, const std::vector<ImageGrid>& stegos,
                     const std::vector<std::size_t>& pairs) {
    if (covers.size() != stegos.size())
        throw std::invalid_argument("covers and stegos must be paired one-to-one (" + std::to_string(covers.size()) +
                                    " covers, " + std::to_string(stegos.size()) + " stegos)");
    Corpus corpus;
    corpus.items.reserve(2 * pairs.size());
    for (const std::size_t i : pairs) {
        if (!covers.at(i).same_shape(stegos.at(i)))
            throw std::invalid_argument("cover and stego of pair " + std::to_string(i) + " differ in shape");
        corpus.items.push_back({covers[i], 0, i});
        corpus.items.push_back({stegos[i], 1, i});
    }
    return corpus;
}

std::pair<Corpus, Corpus> assemble(const std::vector<ImageGrid>& covers, const std::vector<ImageGrid>& stegos,
                                   double train_ratio, std::uint64_t seed) {
    if (covers.size() != stegos.size())
        throw std::invalid_argument("covers and stegos must be paired one-to-one (" + std::to_string(covers.size()) +
                                    " covers, " + std::to_string(stegos.size()) + " stegos)");
    const SplitIndices split = split_pairs(covers.size(), train_ratio, seed);
    Corpus train = normalize(paired_corpus(covers, stegos, split.train));
    Corpus test = paired_corpus(covers, stegos, split.test);
    const NormalizationStats stats = train.stats;
    return {std::move(train), normalize_with(std::move(test), stats)};
}

// ---------------------------------------------------------------- manifests

namespace {

std::vector<std::pair<std::size_t, std::string>> content_lines(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open manifest " + path.string());
    std::vector<std::pair<std::size_t, std::string>> lines;
    std::string line;
    std::size_t number = 0;
    while (std::getline(in, line)) {
        ++number;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        const auto first = line.find_first_not_of(" \t");
        if (first == std::string::npos || line[first] == '#') continue;
        lines.emplace_back(number, line);
    }
    return lines;
}

[[noreturn]] void bad_line(const std::filesystem::path& path, std::size_t number, const std::string& why) {
    throw std::runtime_error(path.string() + ":" + std::to_string(number) + ": " + why);
}

std::ofstream open_for_write(const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
    return out;
}

std::string format_double(double v) {
    std::ostringstream s;
    s.precision(17);
    s << v;
    return s.str();
}

}  // namespace

void write_corpus_manifest(const std::filesystem::path& path, const std::vector<ManifestEntry>& entries,
                           const std::vector<std::string>& header) {
    auto out = open_for_write(path);
    for (const auto& h : header) out << "# " << h << "\n";
    for (const auto& e : entries) out << e.path << " " << e.label << " " << e.source_id << "\n";
    if (!out) throw std::runtime_error("write failed for " + path.string());
}

std::vector<ManifestEntry> read_corpus_manifest(const std::filesystem::path& path) {
    std::vector<ManifestEntry> entries;
    for (const auto& [number, line] : content_lines(path)) {
        std::istringstream fields(line);
        ManifestEntry e;
        std::string extra;
        if (!(fields >> e.path >> e.label >> e.source_id) || (fields >> extra))
            bad_line(path, number, "expected '<path> <label> <source_id>'");
        if (e.label != 0 && e.label != 1) bad_line(path, number, "label must be 0 or 1");
        entries.push_back(std::move(e));
    }
    return entries;
}

std::vector<BatchRecord> read_batch_manifest(const std::filesystem::path& path) {
    std::vector<BatchRecord> records;
    for (const auto& [number, line] : content_lines(path)) {
        std::istringstream fields(line);
        std::string algorithm;
        std::string key;
        std::string extra;
        BatchRecord r;
        if (!(fields >> r.cover_path >> algorithm >> r.payload >> key >> r.output_path) || (fields >> extra))
            bad_line(path, number, "expected '<cover> <algorithm> <alpha> <fixed|per_image>:<seed> <output>'");
        try {
            r.algorithm = parse_algorithm(algorithm);
            const auto colon = key.find(':');
            if (colon == std::string::npos) throw std::invalid_argument("key mode must be written <mode>:<seed>");
            r.key_mode = parse_key_mode(key.substr(0, colon));
            r.key_seed = std::stoull(key.substr(colon + 1));
            if (!(r.payload >= 0.0 && r.payload <= 1.0)) throw std::invalid_argument("payload must lie in [0, 1]");
        } catch (const std::exception& e) {
            bad_line(path, number, e.what());
        }
        records.push_back(std::move(r));
    }
    return records;
}

void write_batch_manifest(const std::filesystem::path& path, const std::vector<BatchRecord>& records,
                          const std::vector<std::string>& header) {
    auto out = open_for_write(path);
    for (const auto& h : header) out << "# " << h << "\n";
    for (const auto& r : records)
        out << r.cover_path << " " << to_string(r.algorithm) << " " << format_double(r.payload) << " "
            << to_string(r.key_mode) << ":" << r.key_seed << " " << r.output_path << "\n";
    if (!out) throw std::runtime_error("write failed for " + path.string());
}

}  // namespace stegcnn
