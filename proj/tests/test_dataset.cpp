#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <set>

#include "stegcnn/dataset.hpp"
#include "stegcnn/pgm.hpp"
#include "stegcnn/rng.hpp"

using namespace stegcnn;
namespace fs = std::filesystem;

namespace {

fs::path scratch_dir(const std::string& name) {
    const fs::path dir = fs::temp_directory_path() / ("stegcnn_test_" + name);
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

PgmError::Kind parse_error_kind(const std::string& bytes) {
    try {
        parse_pgm(bytes);
    } catch (const PgmError& e) {
        return e.kind();
    }
    ADD_FAILURE() << "no error for input";
    return PgmError::Kind::io;
}

std::vector<ImageGrid> tiny_images(std::size_t n, std::uint64_t seed) {
    Xoshiro256 rng{seed};
    std::vector<ImageGrid> out;
    for (std::size_t i = 0; i < n; ++i) {
        ImageGrid g(4, 4);
        for (double& v : g.values()) v = static_cast<double>(rng.below(256));
        out.push_back(g);
    }
    return out;
}

}  // namespace

TEST(Pgm, RoundTrip) {
    Xoshiro256 rng{3};
    ImageGrid g(16, 16);
    for (double& v : g.values()) v = static_cast<double>(rng.below(256));
    const fs::path p = scratch_dir("pgm") / "a.pgm";
    save_pgm(g, p);
    EXPECT_EQ(load_pgm(p), g);
    EXPECT_EQ(parse_pgm(encode_pgm(g)), g);
}

TEST(Pgm, HeaderComments) {
    const std::string bytes = std::string("P5\n# made by hand\n2 # width\n1\n# maxval next\n255\n") + '\x07' + '\xff';
    const ImageGrid g = parse_pgm(bytes);
    EXPECT_EQ(g, ImageGrid(1, 2, {7, 255}));
}

TEST(Pgm, DistinctDiagnostics) {
    EXPECT_EQ(parse_error_kind("P2\n1 1\n255\n7\n"), PgmError::Kind::ascii_variant);
    EXPECT_EQ(parse_error_kind("P6\n1 1\n255\nabc"), PgmError::Kind::bad_magic);
    EXPECT_EQ(parse_error_kind("P5\n1 1\n65535\nab"), PgmError::Kind::unsupported_maxval);
    EXPECT_EQ(parse_error_kind("P5\n4 4\n255\nabc"), PgmError::Kind::truncated);
    EXPECT_EQ(parse_error_kind("P5\nx 4\n255\n"), PgmError::Kind::bad_header);
    try {
        load_pgm("/nonexistent/file.pgm");
        FAIL();
    } catch (const PgmError& e) {
        EXPECT_EQ(e.kind(), PgmError::Kind::io);
        EXPECT_NE(std::string(e.what()).find("/nonexistent/file.pgm"), std::string::npos);
    }
}

TEST(Pgm, EncodeRejectsNonPixels) {
    EXPECT_THROW(encode_pgm(ImageGrid(1, 1, {1.5})), PgmError);
    EXPECT_THROW(encode_pgm(ImageGrid(1, 1, {256})), PgmError);
}

TEST(SynthCovers, Deterministic) {
    EXPECT_EQ(synth_covers(1, 2, 32), synth_covers(1, 2, 32));
    EXPECT_NE(synth_covers(1, 2, 32), synth_covers(2, 2, 32));
    EXPECT_EQ(synth_covers(1, 3, 16)[2], synth_cover(1, 2, 16));
    EXPECT_THROW(synth_cover(1, 0, 7), std::invalid_argument);
}

TEST(SynthCovers, IntegerValuedInRange) {
    for (const auto& c : synth_covers(9, 20, 32))
        for (double v : c.values()) EXPECT_TRUE(v >= 0 && v <= 255 && v == std::round(v));
}

TEST(SynthCovers, BatchHistogramSpread) {
    std::set<int> seen;
    for (const auto& c : synth_covers(1, 1000, 32))
        for (double v : c.values()) seen.insert(static_cast<int>(v));
    EXPECT_GE(seen.size(), 200u);
}

TEST(SynthCovers, TexturedAndSmoothRegionsCoexist) {
    for (const auto& c : synth_covers(4, 50, 32)) {
        double lo = 1e300, hi = 0.0;
        for (int r = 1; r + 1 < 32; ++r)
            for (int col = 1; col + 1 < 32; ++col) {
                double s = 0, s2 = 0;
                for (int u = -1; u <= 1; ++u)
                    for (int v = -1; v <= 1; ++v) {
                        s += c(r + u, col + v);
                        s2 += c(r + u, col + v) * c(r + u, col + v);
                    }
                const double var = s2 / 9 - (s / 9) * (s / 9);
                lo = std::min(lo, var);
                hi = std::max(hi, var);
            }
        EXPECT_GT(hi, 10.0 * lo);
    }
}

TEST(Normalize, TwoPixelCorpus) {
    Corpus c;
    c.items = {{ImageGrid(1, 1, {0}), 0, 0}, {ImageGrid(1, 1, {255}), 1, 0}};
    const Corpus n = normalize(c);
    EXPECT_EQ(n.items[0].image(0, 0), -1.0);
    EXPECT_EQ(n.items[1].image(0, 0), 1.0);
    EXPECT_EQ(n.stats.mean, 0.5);
    EXPECT_EQ(n.stats.std, 0.5);
    EXPECT_TRUE(n.normalized);
}

TEST(Normalize, ConstantCorpusRejected) {
    Corpus c;
    c.items = {{ImageGrid::filled(2, 2, 9), 0, 0}, {ImageGrid::filled(2, 2, 9), 1, 0}};
    EXPECT_THROW(normalize(c), std::invalid_argument);
    EXPECT_THROW(normalize(Corpus{}), std::invalid_argument);
}

TEST(Normalize, ZeroMeanUnitStd) {
    Corpus c;
    for (const auto& g : synth_covers(3, 40, 32)) c.items.push_back({g, 0, 0});
    const Corpus n = normalize(c);
    double s = 0, s2 = 0, count = 0;
    for (const auto& it : n.items)
        for (double v : it.image.values()) {
            s += v;
            s2 += v * v;
            ++count;
        }
    EXPECT_LT(std::abs(s / count), 1e-9);
    EXPECT_LT(std::abs(std::sqrt(s2 / count - (s / count) * (s / count)) - 1.0), 1e-9);
}

TEST(Normalize, TwiceIsAnError) {
    Corpus c;
    c.items = {{ImageGrid(1, 1, {0}), 0, 0}, {ImageGrid(1, 1, {255}), 1, 0}};
    const Corpus n = normalize(c);
    EXPECT_THROW(normalize(n), std::logic_error);
    EXPECT_THROW(normalize_with(n, n.stats), std::logic_error);
}

TEST(Assemble, SplitSizesAndNoLeakage) {
    const auto covers = tiny_images(10, 1), stegos = tiny_images(10, 2);
    const auto [train, test] = assemble(covers, stegos, 0.8, 7);
    EXPECT_EQ(train.size(), 16u);
    EXPECT_EQ(test.size(), 4u);
    std::set<std::uint64_t> train_ids, test_ids;
    int train_stego = 0, test_stego = 0;
    for (const auto& s : train.items) train_ids.insert(s.source_id), train_stego += s.label;
    for (const auto& s : test.items) test_ids.insert(s.source_id), test_stego += s.label;
    for (auto id : test_ids) EXPECT_FALSE(train_ids.count(id));
    EXPECT_EQ(train_stego, 8);
    EXPECT_EQ(test_stego, 2);
}

TEST(Assemble, SeededSplitAndTrainStatistics) {
    const auto covers = tiny_images(10, 1), stegos = tiny_images(10, 2);
    const auto a = assemble(covers, stegos, 0.8, 7), b = assemble(covers, stegos, 0.8, 7);
    for (std::size_t i = 0; i < a.second.size(); ++i) EXPECT_EQ(a.second.items[i].source_id, b.second.items[i].source_id);
    EXPECT_EQ(a.second.stats, a.first.stats);
    EXPECT_NE(compute_stats(paired_corpus(covers, stegos, split_pairs(10, 0.8, 7).test)), a.first.stats);
    EXPECT_THROW(assemble(covers, tiny_images(9, 3), 0.8, 7), std::invalid_argument);
}

TEST(Assemble, SplitPairsRounds) {
    const auto s = split_pairs(1000, 0.8, 3);
    EXPECT_EQ(s.train.size(), 800u);
    EXPECT_EQ(s.test.size(), 200u);
    std::set<std::size_t> all(s.train.begin(), s.train.end());
    all.insert(s.test.begin(), s.test.end());
    EXPECT_EQ(all.size(), 1000u);
}

TEST(Manifest, CorpusRoundTrip) {
    const fs::path p = scratch_dir("manifest") / "corpus.manifest";
    const std::vector<ManifestEntry> entries = {{"covers/a.pgm", 0, 0}, {"stego/a.pgm", 1, 0}};
    write_corpus_manifest(p, entries, {"seed 1"});
    EXPECT_EQ(read_corpus_manifest(p), entries);
    std::ofstream(p) << "a.pgm 2 0\n";
    EXPECT_THROW(read_corpus_manifest(p), std::runtime_error);
}

TEST(Manifest, BatchRoundTrip) {
    const fs::path p = scratch_dir("batch") / "batch.manifest";
    const std::vector<BatchRecord> records = {{"c0.pgm", StegoAlgorithm::dct_lsb, 0.1, KeyMode::per_image, 17, "out/s0.pgm"},
                                              {"c1.pgm", StegoAlgorithm::lsb_matching, 0.4, KeyMode::fixed, 3, "s1.pgm"}};
    write_batch_manifest(p, records, {"made by a test"});
    const auto back = read_batch_manifest(p);
    ASSERT_EQ(back.size(), 2u);
    EXPECT_EQ(back[0].algorithm, StegoAlgorithm::dct_lsb);
    EXPECT_EQ(back[0].payload, 0.1);
    EXPECT_EQ(back[0].key_mode, KeyMode::per_image);
    EXPECT_EQ(back[0].key_seed, 17u);
    EXPECT_EQ(back[1].output_path, "s1.pgm");
    std::ofstream(p) << "c.pgm lsb_matching 0.4 sometimes:3 o.pgm\n";
    EXPECT_THROW(read_batch_manifest(p), std::runtime_error);
}
