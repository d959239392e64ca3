#pragma once

// Experiment configuration and the generate / train / eval / gradcheck
// commands behind the stegcnn CLI.
//
// Config files are line-oriented `key = value` text; '#' starts a comment.
// Keys and defaults (see default_config_text()):
//
//   image_size      32        side of the synthetic covers
//   cover_count     1000
//   cover_seed      1
//   algorithm       lsb_matching | adaptive_cost | dct_lsb
//   payload         0.4
//   key_mode        fixed | per_image
//   key_seed        42        key (fixed) or master seed (per_image)
//   message_seed    7
//   split_ratio     0.8       fraction of cover/stego pairs used for training
//   split_seed      3
//   layer2_kernels  16
//   init_seed       11
//   batch_size      100
//   lr              0.5
//   lr_decay        5e-7
//   momentum        0
//   max_epochs      200
//   patience        0         early stopping patience; 0 disables it
//   shuffle_seed    5
//   threads         0         0 = all hardware threads; never changes results
//   out_dir         out
//   record_wall_time false    fill the history CSV `seconds` column
//
// Layout of out_dir:
//   covers/cover_NNNNN.pgm, stego/stego_NNNNN.pgm, corpus.manifest,
//   modifications.csv (generate); history.csv, best.ckpt, final.ckpt,
//   report.txt (train).

#include <cstdint>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "stegcnn/checkpoint.hpp"
#include "stegcnn/dataset.hpp"
#include "stegcnn/gradcheck.hpp"
#include "stegcnn/stego.hpp"
#include "stegcnn/trainer.hpp"

namespace stegcnn {

/// Bad configuration or command usage (exit code 2).
class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct ExperimentConfig {
    int image_size = 32;
    std::size_t cover_count = 1000;
    std::uint64_t cover_seed = 1;
    StegoConfig stego{StegoAlgorithm::lsb_matching, 0.4, KeyMode::fixed, 42, 7};
    double split_ratio = 0.8;
    std::uint64_t split_seed = 3;
    int layer2_kernels = 16;
    std::uint64_t init_seed = 11;
    TrainConfig train{100, 0.5, 5e-7, 0.0, 200, std::nullopt, 5, 0};
    std::filesystem::path out_dir = "out";
    bool record_wall_time = false;

    /// Throws ConfigError.
    void validate() const;

    NetworkSpec network() const { return desk_network_spec(image_size, layer2_kernels); }
};

/// Applies one `key=value` assignment; throws ConfigError on unknown keys or bad values.
void apply_setting(ExperimentConfig& cfg, const std::string& assignment);

/// Parses config text on top of `base`. Throws ConfigError naming the line.
ExperimentConfig parse_config(const std::string& text, ExperimentConfig base = {});
ExperimentConfig load_config(const std::filesystem::path& path, ExperimentConfig base = {});

/// Every key in a fixed order, doubles printed exactly; parse_config(config_text(c)) == c.
std::string config_text(const ExperimentConfig& cfg);

/// FNV-1a 64 over the canonical lines of every key that can change results
/// (all but out_dir, threads and record_wall_time), as 16 hex digits.
std::string config_digest(const ExperimentConfig& cfg);

/// Seeds and digest as `key value` pairs, echoed into every artifact.
std::vector<std::pair<std::string, std::string>> provenance(const ExperimentConfig& cfg);

// ------------------------------------------------------------- in memory

struct GeneratedCorpus {
    std::vector<ImageGrid> covers;
    std::vector<ImageGrid> stegos;
    std::vector<std::size_t> modified;
};

/// Covers from (cover_seed, cover_count, image_size) and their stego twins;
/// pair i is embedded with image index i.
GeneratedCorpus generate_corpus(const ExperimentConfig& cfg);

/// Embeds every cover again under `stego` (used for cross-payload evaluation).
std::vector<ImageGrid> embed_all(const std::vector<ImageGrid>& covers, const std::vector<std::uint64_t>& indices,
                                 const StegoConfig& stego);

/// Splits and normalizes as cmd_train does, trains from the init seed.
TrainResult train_corpus(const ExperimentConfig& cfg, const GeneratedCorpus& corpus, const EpochCallback& on_epoch = {});

// ------------------------------------------------------------- commands

struct GenerateSummary {
    std::filesystem::path manifest;
    std::size_t pairs = 0;
    double mean_modified = 0.0;
};

/// Writes covers, stegos, corpus.manifest and modifications.csv under out_dir.
GenerateSummary cmd_generate(const ExperimentConfig& cfg);

/// Embeds every record of a batch manifest (paths relative to the manifest's
/// directory). Record i uses image index i; message bits come from
/// cfg.stego.message_seed. Writes batch_modifications.csv under out_dir.
std::size_t cmd_generate_batch(const ExperimentConfig& cfg, const std::filesystem::path& batch_manifest);

struct TrainSummary {
    TrainHistory history;
    DetectionReport best_test;
};

/// Loads out_dir/corpus.manifest, trains, writes history.csv, best.ckpt,
/// final.ckpt and report.txt (best parameters on the test split).
TrainSummary cmd_train(const ExperimentConfig& cfg, const EpochCallback& on_epoch = {});

enum class EvalSplit { all, train, test };
EvalSplit parse_split(const std::string& text);

struct EvalOptions {
    std::filesystem::path checkpoint;
    std::filesystem::path manifest;
    EvalSplit split = EvalSplit::all;
    /// Re-embed the manifest's covers at this payload (same key and message
    /// seeds as the checkpoint) instead of using its stego files.
    std::optional<double> payload;
    std::optional<std::filesystem::path> report;
    int threads = 0;
};

/// Evaluates a checkpoint on a corpus manifest. Throws ConfigError when the
/// checkpoint's input size does not match the images, before any inference.
DetectionReport cmd_eval(const EvalOptions& opts);

/// Finite-difference suite; the report's passed() decides the exit code.
GradCheckReport cmd_gradcheck(std::uint64_t seed, int size, const std::optional<std::string>& fault_class = {});

}  // namespace stegcnn
