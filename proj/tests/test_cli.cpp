#include <gtest/gtest.h>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "stegcnn/experiment.hpp"
#include "stegcnn/pgm.hpp"

using namespace stegcnn;
namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
}

fs::path scratch(const std::string& name) {
    const fs::path dir = fs::temp_directory_path() / ("stegcnn_cli_" + name);
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

ExperimentConfig small(const fs::path& out) {
    ExperimentConfig cfg = parse_config(
        "image_size = 16\ncover_count = 40\nlayer2_kernels = 4\nbatch_size = 8\nmax_epochs = 6\nlr = 0.1\n");
    cfg.out_dir = out;
    cfg.train.threads = 1;
    return cfg;
}

int run_cli(const std::string& args) {
    const int status = std::system((std::string(STEGCNN_CLI) + " " + args + " >/dev/null 2>&1").c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::vector<std::string> data_lines(const std::string& text) {
    std::vector<std::string> out;
    std::istringstream in(text);
    for (std::string line; std::getline(in, line);)
        if (!line.empty() && line[0] != '#') out.push_back(line);
    return out;
}

}  // namespace

TEST(Config, DefaultsAndOverrides) {
    const ExperimentConfig d;
    EXPECT_EQ(d.image_size, 32);
    EXPECT_EQ(d.train.lr0, 0.5);
    const ExperimentConfig c = parse_config("# comment\npayload = 0.1\n\nkey_mode = per_image  # trailing\npatience = 4\n");
    EXPECT_EQ(c.stego.payload, 0.1);
    EXPECT_EQ(c.stego.key_mode, KeyMode::per_image);
    EXPECT_EQ(c.train.patience, 4);
    EXPECT_FALSE(parse_config("patience = 0").train.patience.has_value());
}

TEST(Config, Errors) {
    EXPECT_THROW(parse_config("no_such_key = 1"), ConfigError);
    EXPECT_THROW(parse_config("payload = lots"), ConfigError);
    EXPECT_THROW(parse_config("algorithm = hugo"), ConfigError);
    EXPECT_THROW(parse_config("payload"), ConfigError);
    try {
        parse_config("image_size = 16\nbogus = 2\n");
        FAIL();
    } catch (const ConfigError& e) {
        EXPECT_NE(std::string(e.what()).find("line 2"), std::string::npos);
    }
    ExperimentConfig cfg;
    cfg.stego.payload = 1.5;
    EXPECT_THROW(cfg.validate(), ConfigError);
    cfg = ExperimentConfig{};
    cfg.cover_count = 10;
    EXPECT_THROW(cfg.validate(), ConfigError);  // batch 100 > 16 training images
    cfg = ExperimentConfig{};
    cfg.stego.algorithm = StegoAlgorithm::dct_lsb;
    cfg.image_size = 20;
    EXPECT_THROW(cfg.validate(), ConfigError);
}

TEST(Config, TextRoundTripAndDigest) {
    ExperimentConfig c = parse_config("payload = 0.1\nlr_decay = 3e-7\nsplit_ratio = 0.75\nmomentum = 0.9\n");
    const ExperimentConfig back = parse_config(config_text(c));
    EXPECT_EQ(config_text(back), config_text(c));
    EXPECT_EQ(config_digest(back), config_digest(c));
    EXPECT_EQ(config_digest(c).size(), 16u);

    ExperimentConfig d = c;
    d.out_dir = "elsewhere";
    d.train.threads = 7;
    d.record_wall_time = true;
    EXPECT_EQ(config_digest(d), config_digest(c));
    d.init_seed += 1;
    EXPECT_NE(config_digest(d), config_digest(c));
    EXPECT_EQ(provenance(c).front().first, "config_digest");
}

TEST(Generate, ZeroPayloadCopiesCovers) {
    const fs::path dir = scratch("zero");
    ExperimentConfig cfg = small(dir);
    cfg.cover_count = 6;
    cfg.train.batch_size = 2;
    cfg.stego.payload = 0.0;
    const GenerateSummary s = cmd_generate(cfg);
    EXPECT_EQ(s.pairs, 6u);
    EXPECT_EQ(s.mean_modified, 0.0);
    for (int i = 0; i < 6; ++i) {
        char name[32];
        std::snprintf(name, sizeof name, "%05d.pgm", i);
        EXPECT_EQ(slurp(dir / "covers" / (std::string("cover_") + name)),
                  slurp(dir / "stego" / (std::string("stego_") + name)));
    }
}

TEST(Generate, ManifestAndModificationCounts) {
    const fs::path dir = scratch("gen");
    ExperimentConfig cfg = small(dir);
    cfg.image_size = 32;
    cfg.cover_count = 60;
    const GenerateSummary s = cmd_generate(cfg);
    const auto entries = read_corpus_manifest(s.manifest);
    ASSERT_EQ(entries.size(), 120u);
    for (const auto& e : entries) EXPECT_TRUE(fs::exists(dir / e.path)) << e.path;

    // 410 visited positions, each changed with probability 1/2.
    const double sigma_mean = std::sqrt(410 * 0.25 / 60.0);
    EXPECT_NEAR(s.mean_modified, 205.0, 3 * sigma_mean);

    const std::string csv = slurp(dir / "modifications.csv");
    EXPECT_NE(csv.find("# config_digest " + config_digest(cfg)), std::string::npos);
    EXPECT_EQ(data_lines(csv).size(), 61u);
}

TEST(Generate, BatchManifest) {
    const fs::path dir = scratch("batch");
    save_pgm(synth_cover(1, 0, 16), dir / "a.pgm");
    save_pgm(synth_cover(1, 1, 16), dir / "b.pgm");
    write_batch_manifest(dir / "batch.manifest",
                         {{"a.pgm", StegoAlgorithm::lsb_matching, 0.0, KeyMode::fixed, 9, "out/a.pgm"},
                          {"b.pgm", StegoAlgorithm::lsb_matching, 0.5, KeyMode::per_image, 9, "out/b.pgm"}},
                         {});
    ExperimentConfig cfg = small(dir / "log");
    EXPECT_EQ(cmd_generate_batch(cfg, dir / "batch.manifest"), 2u);
    EXPECT_EQ(slurp(dir / "a.pgm"), slurp(dir / "out/a.pgm"));
    const auto b = embed(load_pgm(dir / "b.pgm"), {StegoAlgorithm::lsb_matching, 0.5, KeyMode::per_image, 9, 7}, 1);
    EXPECT_EQ(load_pgm(dir / "out/b.pgm"), b.stego);
    EXPECT_TRUE(fs::exists(dir / "log/batch_modifications.csv"));
    EXPECT_THROW(cmd_generate_batch(cfg, dir / "missing.manifest"), ConfigError);
}

class Pipeline : public ::testing::Test {
protected:
    static void SetUpTestSuite() {
        dir_a = scratch("run_a");
        dir_b = scratch("run_b");
        cmd_generate(small(dir_a));
        summary = cmd_train(small(dir_a));
        cmd_generate(small(dir_b));
        cmd_train(small(dir_b));
    }
    static inline fs::path dir_a, dir_b;
    static inline TrainSummary summary;
};

TEST_F(Pipeline, ArtifactsAreByteIdenticalAcrossRuns) {
    for (const char* f : {"history.csv", "report.txt", "best.ckpt", "final.ckpt", "corpus.manifest", "modifications.csv"})
        EXPECT_EQ(slurp(dir_a / f), slurp(dir_b / f)) << f;
}

TEST_F(Pipeline, HistoryAndBestCheckpoint) {
    const auto rows = data_lines(slurp(dir_a / "history.csv"));
    ASSERT_GE(rows.size(), 2u);
    EXPECT_EQ(rows.front(), "epoch,train_acc,test_acc,mean_loss,lr,seconds");
    EXPECT_LE(rows.size() - 1, 6u);

    const auto& h = summary.history;
    const Checkpoint best = load_checkpoint(dir_a / "best.ckpt");
    EXPECT_EQ(best.epoch, h.epochs[static_cast<std::size_t>(h.best_epoch)].epoch);
    for (const auto& e : h.epochs) EXPECT_LE(e.test_accuracy, summary.best_test.total_accuracy());
    EXPECT_EQ(summary.best_test.total_accuracy(), h.epochs[static_cast<std::size_t>(h.best_epoch)].test_accuracy);
    EXPECT_EQ(best.meta("kind"), "best");
    EXPECT_EQ(best.meta("config_digest"), config_digest(small(dir_a)));

    const std::string report = slurp(dir_a / "report.txt");
    EXPECT_NE(report.find("# config_digest"), std::string::npos);
    EXPECT_NE(report.find("# init_seed 11"), std::string::npos);
    EXPECT_EQ(summary.best_test.total(), 16u);
}

TEST_F(Pipeline, EvalOnTrainSplitMatchesLastEpoch) {
    EvalOptions opts;
    opts.checkpoint = dir_a / "final.ckpt";
    opts.manifest = dir_a / "corpus.manifest";
    opts.split = EvalSplit::train;
    opts.report = dir_a / "eval.txt";
    const DetectionReport r = cmd_eval(opts);
    EXPECT_NEAR(r.total_accuracy(), summary.history.epochs.back().train_accuracy, 1e-12);
    EXPECT_EQ(r.total(), 64u);
    const std::string text = slurp(dir_a / "eval.txt");
    EXPECT_NE(text.find("# config_digest"), std::string::npos);
    EXPECT_NE(text.find("# split train"), std::string::npos);

    opts.split = EvalSplit::test;
    opts.checkpoint = dir_a / "best.ckpt";
    EXPECT_EQ(cmd_eval(opts).confusion, summary.best_test.confusion);
}

TEST_F(Pipeline, EvalCrossPayload) {
    EvalOptions opts;
    opts.checkpoint = dir_a / "final.ckpt";
    opts.manifest = dir_a / "corpus.manifest";
    const DetectionReport same = cmd_eval(opts);
    opts.payload = 0.4;
    EXPECT_EQ(cmd_eval(opts).confusion, same.confusion);  // re-embedding at the trained payload reproduces the files
    opts.payload = 0.0;
    const DetectionReport none = cmd_eval(opts);
    EXPECT_EQ(none.confusion[0], same.confusion[0]);
    opts.payload = 3.0;
    EXPECT_THROW(cmd_eval(opts), ConfigError);
}

TEST_F(Pipeline, EvalRejectsSizeMismatch) {
    const fs::path dir = scratch("mismatch");
    ExperimentConfig cfg = small(dir);
    cfg.image_size = 24;
    cmd_generate(cfg);
    EvalOptions opts;
    opts.checkpoint = dir_a / "final.ckpt";
    opts.manifest = dir / "corpus.manifest";
    EXPECT_THROW(cmd_eval(opts), ConfigError);
}

TEST_F(Pipeline, TrainRejectsMismatchedCorpus) {
    ExperimentConfig cfg = small(dir_a);
    cfg.cover_count = 30;
    EXPECT_THROW(cmd_train(cfg), ConfigError);
    EXPECT_THROW(cmd_train(small(scratch("empty"))), ConfigError);
}

TEST(Gradcheck, Command) {
    EXPECT_TRUE(cmd_gradcheck(1, 6).passed());
    EXPECT_FALSE(cmd_gradcheck(1, 6, "output.bias").passed());
    EXPECT_THROW(cmd_gradcheck(1, 40), ConfigError);
    EXPECT_THROW(cmd_gradcheck(1, 6, "layer9.weights"), ConfigError);
}

TEST(Binary, ExitCodes) {
    EXPECT_EQ(run_cli("gradcheck --seed 2 --size 6"), 0);
    EXPECT_EQ(run_cli("gradcheck --seed 2 --size 6 --inject-fault layer1.weights"), 1);
    EXPECT_EQ(run_cli("gradcheck --size 99"), 2);
    EXPECT_EQ(run_cli("frobnicate"), 2);
    EXPECT_EQ(run_cli(""), 2);
    EXPECT_EQ(run_cli("generate -s nonsense=1"), 2);
    EXPECT_EQ(run_cli("eval --checkpoint /nonexistent.ckpt --manifest /nonexistent.manifest"), 2);
}

TEST(Binary, GenerateAndTrain) {
    const fs::path dir = scratch("binary");
    const std::string common =
        " -o " + dir.string() + " -s image_size=16 -s cover_count=20 -s layer2_kernels=2 -s batch_size=4 -s max_epochs=2";
    ASSERT_EQ(run_cli("generate" + common), 0);
    ASSERT_EQ(run_cli("train -q" + common), 0);
    EXPECT_TRUE(fs::exists(dir / "report.txt"));
    EXPECT_EQ(run_cli("eval --checkpoint " + (dir / "best.ckpt").string() + " --manifest " +
                      (dir / "corpus.manifest").string() + " --split test"),
              0);
}
