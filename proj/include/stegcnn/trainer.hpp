#pragma once

// Mini-batch SGD training, evaluation and detection reports.

#include <array>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "stegcnn/dataset.hpp"
#include "stegcnn/network.hpp"

namespace stegcnn {

struct TrainConfig {
    int batch_size = 100;
    double lr0 = 0.5;
    double lr_decay = 5e-7;
    double momentum = 0.0;
    int max_epochs = 200;
    std::optional<int> patience;  // early stopping; disabled when empty
    std::uint64_t shuffle_seed = 1;
    /// Worker threads for per-sample gradients and evaluation; 0 = hardware.
    /// Results do not depend on this value.
    int threads = 0;

    void validate() const;
};

/// lr0 / (1 + lr_decay * t), t = number of updates already applied.
double learning_rate(const TrainConfig& cfg, std::uint64_t step_index) noexcept;

/// Momentum buffer, lazily sized on first use.
struct SgdState {
    std::vector<double> velocity;
};

/// One update with the learning rate for update number `step_index`:
/// v <- m*v - lr*g; w <- w + v.
void sgd_step(ParameterStore& params, const ParameterStore& grads, std::uint64_t step_index, const TrainConfig& cfg,
              SgdState& state);

struct DetectionReport {
    /// confusion[true][predicted], 0 = cover, 1 = stego
    std::array<std::array<std::uint64_t, 2>, 2> confusion{};

    std::uint64_t total() const noexcept;
    double cover_accuracy() const noexcept;
    double stego_accuracy() const noexcept;
    double total_accuracy() const noexcept;
};

/// Cover / stego / total accuracy columns and the confusion matrix, preceded
/// by '#' provenance lines.
std::string format_report(const DetectionReport& report, const std::vector<std::string>& provenance = {});

DetectionReport evaluate(const ParameterStore& params, const NetworkSpec& spec, const Corpus& corpus, int threads = 0);

struct EpochRecord {
    int epoch = 0;  // 1-based
    double train_accuracy = 0.0;
    double test_accuracy = 0.0;
    double mean_loss = 0.0;
    double learning_rate = 0.0;
    double seconds = 0.0;
};

struct TrainHistory {
    std::vector<EpochRecord> epochs;
    /// Index into `epochs` of the first maximum of test accuracy; -1 when empty.
    int best_epoch = -1;
};

/// Tracks epochs without test-accuracy improvement.
class EarlyStopping {
public:
    explicit EarlyStopping(std::optional<int> patience) : patience_{patience} {}

    /// Records one epoch's test accuracy; true if training should stop now.
    bool update(double test_accuracy);

private:
    std::optional<int> patience_;
    double best_ = -1.0;  // accuracies are >= 0
    int stale_ = 0;
};

struct TrainResult {
    ParameterStore final_params;
    ParameterStore best_params;
    TrainHistory history;
};

using EpochCallback = std::function<void(const EpochRecord&)>;

/// Trains from `initial`. Both corpora must be normalized; training must be non-empty.
TrainResult train(const ParameterStore& initial, const NetworkSpec& spec, const Corpus& train_set, const Corpus& test_set,
                  const TrainConfig& cfg, const EpochCallback& on_epoch = {});

/// Mean gradient over `indices` of `corpus`, summed in a fixed order that does
/// not depend on the thread count. Returns the summed loss.
double batch_gradient(const ParameterStore& params, const NetworkSpec& spec, const Corpus& corpus,
                      std::span<const std::size_t> indices, ParameterStore& grads, int threads = 0);

/// CSV columns: epoch,train_acc,test_acc,mean_loss,lr,seconds. The seconds
/// field is left empty unless `with_wall_time`, keeping the file reproducible.
std::string history_csv(const TrainHistory& history, bool with_wall_time);
void write_history_csv(const std::filesystem::path& path, const TrainHistory& history, bool with_wall_time);

}  // namespace stegcnn
