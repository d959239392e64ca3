#include "stegcnn/trainer.hpp"

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <mutex>
#include <thread>

#include "stegcnn/rng.hpp"

namespace stegcnn {

void TrainConfig::validate() const {
    if (batch_size <= 0) throw std::invalid_argument("batch_size must be positive");
    if (!(lr0 > 0.0)) throw std::invalid_argument("learning rate must be positive");
    if (!(lr_decay >= 0.0)) throw std::invalid_argument("learning rate decay must be non-negative");
    if (!(momentum >= 0.0)) throw std::invalid_argument("momentum must be non-negative");
    if (max_epochs < 0) throw std::invalid_argument("max_epochs must be non-negative");
    if (patience && *patience <= 0) throw std::invalid_argument("early-stopping patience must be positive");
    if (threads < 0) throw std::invalid_argument("threads must be non-negative");
}

double learning_rate(const TrainConfig& cfg, std::uint64_t step_index) noexcept {
    return cfg.lr0 / (1.0 + cfg.lr_decay * static_cast<double>(step_index));
}

void sgd_step(ParameterStore& params, const ParameterStore& grads, std::uint64_t step_index, const TrainConfig& cfg,
              SgdState& state) {
    if (!params.compatible(grads) || params.size() != grads.size())
        throw std::invalid_argument("sgd_step: gradient store does not match the parameters");
    const double lr = learning_rate(cfg, step_index);
    auto w = params.values();
    const auto g = grads.values();
    if (cfg.momentum == 0.0) {
        for (std::size_t i = 0; i < w.size(); ++i) w[i] += -lr * g[i];
        return;
    }
    if (state.velocity.size() != w.size()) state.velocity.assign(w.size(), 0.0);
    for (std::size_t i = 0; i < w.size(); ++i) {
        state.velocity[i] = cfg.momentum * state.velocity[i] - lr * g[i];
        w[i] += state.velocity[i];
    }
}

std::uint64_t DetectionReport::total() const noexcept {
    return confusion[0][0] + confusion[0][1] + confusion[1][0] + confusion[1][1];
}

double DetectionReport::cover_accuracy() const noexcept {
    const auto n = confusion[0][0] + confusion[0][1];
    return n == 0 ? 0.0 : static_cast<double>(confusion[0][0]) / static_cast<double>(n);
}

double DetectionReport::stego_accuracy() const noexcept {
    const auto n = confusion[1][0] + confusion[1][1];
    return n == 0 ? 0.0 : static_cast<double>(confusion[1][1]) / static_cast<double>(n);
}

double DetectionReport::total_accuracy() const noexcept {
    const auto n = total();
    return n == 0 ? 0.0 : static_cast<double>(confusion[0][0] + confusion[1][1]) / static_cast<double>(n);
}

std::string format_report(const DetectionReport& report, const std::vector<std::string>& provenance) {
    auto pct = [](double x) {
        char buf[32];
        std::snprintf(buf, sizeof buf, "%.2f%%", 100.0 * x);
        return std::string(buf);
    };
    char line[256];
    std::ostringstream out;
    for (const auto& p : provenance) out << "# " << p << "\n";
    std::snprintf(line, sizeof line, "%-10s %10s %10s %10s\n", "", "Cover", "Stego", "Total");
    out << line;
    std::snprintf(line, sizeof line, "%-10s %10s %10s %10s\n", "accuracy", pct(report.cover_accuracy()).c_str(),
                  pct(report.stego_accuracy()).c_str(), pct(report.total_accuracy()).c_str());
    out << line;
    out << "\nconfusion matrix (rows: true class, columns: predicted class)\n";
    std::snprintf(line, sizeof line, "%-10s %10s %10s\n", "", "cover", "stego");
    out << line;
    const char* names[2] = {"cover", "stego"};
    for (int t = 0; t < 2; ++t) {
        std::snprintf(line, sizeof line, "%-10s %10llu %10llu\n", names[t],
                      static_cast<unsigned long long>(report.confusion[t][0]),
                      static_cast<unsigned long long>(report.confusion[t][1]));
        out << line;
    }
    std::snprintf(line, sizeof line, "total      %10llu\n", static_cast<unsigned long long>(report.total()));
    out << line;
    return out.str();
}

namespace {

int resolve_threads(int threads) {
    if (threads > 0) return threads;
    const unsigned hw = std::thread::hardware_concurrency();
    return hw == 0 ? 1 : static_cast<int>(hw);
}

/// Runs fn(task) for task in [0, tasks) across `threads` workers.
template <typename Fn>
void parallel_tasks(std::size_t tasks, int threads, Fn&& fn) {
    const auto workers = std::min<std::size_t>(tasks, static_cast<std::size_t>(resolve_threads(threads)));
    if (workers <= 1) {
        for (std::size_t t = 0; t < tasks; ++t) fn(t);
        return;
    }
    std::vector<std::jthread> pool;
    pool.reserve(workers);
    std::exception_ptr error;
    std::mutex error_mutex;
    for (std::size_t w = 0; w < workers; ++w)
        pool.emplace_back([&, w] {
            try {
                for (std::size_t t = w; t < tasks; t += workers) fn(t);
            } catch (...) {
                std::lock_guard lock(error_mutex);
                if (!error) error = std::current_exception();
            }
        });
    pool.clear();
    if (error) std::rethrow_exception(error);
}

// Gradient accumulation granularity; fixed so summation order is independent
// of the number of threads.
constexpr std::size_t chunk_samples = 8;

void require_normalized(const Corpus& corpus, const char* which) {
    if (!corpus.normalized) throw std::invalid_argument(std::string(which) + " corpus is not normalized");
}

}  // namespace

DetectionReport evaluate(const ParameterStore& params, const NetworkSpec& spec, const Corpus& corpus, int threads) {
    require_normalized(corpus, "evaluation");
    std::vector<int> predicted(corpus.size(), 0);
    parallel_tasks(corpus.size(), threads,
                   [&](std::size_t i) { predicted[i] = forward(params, spec, corpus.items[i].image).predicted(); });
    DetectionReport report;
    for (std::size_t i = 0; i < corpus.size(); ++i)
        ++report.confusion[static_cast<std::size_t>(corpus.items[i].label)][static_cast<std::size_t>(predicted[i])];
    return report;
}

double batch_gradient(const ParameterStore& params, const NetworkSpec& spec, const Corpus& corpus,
                      std::span<const std::size_t> indices, ParameterStore& grads, int threads) {
    if (indices.empty()) throw std::invalid_argument("batch_gradient: empty batch");
    grads.set_zero();
    const double scale = 1.0 / static_cast<double>(indices.size());
    const std::size_t chunks = (indices.size() + chunk_samples - 1) / chunk_samples;
    std::vector<ParameterStore> partial(chunks, ParameterStore(spec));
    std::vector<double> losses(indices.size(), 0.0);
    parallel_tasks(chunks, threads, [&](std::size_t c) {
        const std::size_t end = std::min(indices.size(), (c + 1) * chunk_samples);
        for (std::size_t i = c * chunk_samples; i < end; ++i) {
            const Sample& s = corpus.items.at(indices[i]);
            losses[i] = accumulate_gradient(params, spec, s.image, s.label, partial[c], scale).loss;
        }
    });
    auto g = grads.values();
    for (const auto& p : partial) {
        const auto pv = p.values();
        for (std::size_t i = 0; i < g.size(); ++i) g[i] += pv[i];
    }
    double total = 0.0;
    for (double l : losses) total += l;
    return total;
}

bool EarlyStopping::update(double test_accuracy) {
    if (test_accuracy > best_) {
        best_ = test_accuracy;
        stale_ = 0;
    } else {
        ++stale_;
    }
    return patience_ && stale_ >= *patience_;
}

TrainResult train(const ParameterStore& initial, const NetworkSpec& spec, const Corpus& train_set, const Corpus& test_set,
                  const TrainConfig& cfg, const EpochCallback& on_epoch) {
    cfg.validate();
    if (train_set.empty()) throw std::invalid_argument("training corpus is empty");
    if (static_cast<std::size_t>(cfg.batch_size) > train_set.size())
        throw std::invalid_argument("batch_size exceeds the training corpus");
    require_normalized(train_set, "training");
    require_normalized(test_set, "test");
    if (!(initial.spec() == spec)) throw std::invalid_argument("initial parameters do not match the network spec");

    TrainResult result{initial, initial, {}};
    ParameterStore grads(spec);
    SgdState sgd;
    EarlyStopping stopper(cfg.patience);
    std::uint64_t step = 0;
    double best_accuracy = -1.0;

    for (int epoch = 1; epoch <= cfg.max_epochs; ++epoch) {
        const auto started = std::chrono::steady_clock::now();
        KeyedPermutation order(mix_seed(cfg.shuffle_seed, static_cast<std::uint64_t>(epoch)), train_set.size());
        const std::vector<std::size_t>& indices = order.full();

        double loss_sum = 0.0;
        double lr = learning_rate(cfg, step);
        for (std::size_t begin = 0; begin < indices.size(); begin += static_cast<std::size_t>(cfg.batch_size)) {
            const std::size_t end = std::min(indices.size(), begin + static_cast<std::size_t>(cfg.batch_size));
            const std::span<const std::size_t> batch(indices.data() + begin, end - begin);
            loss_sum += batch_gradient(result.final_params, spec, train_set, batch, grads, cfg.threads);
            lr = learning_rate(cfg, step);
            sgd_step(result.final_params, grads, step, cfg, sgd);
            ++step;
        }

        EpochRecord record;
        record.epoch = epoch;
        record.mean_loss = loss_sum / static_cast<double>(train_set.size());
        record.learning_rate = lr;
        record.train_accuracy = evaluate(result.final_params, spec, train_set, cfg.threads).total_accuracy();
        record.test_accuracy =
            test_set.empty() ? 0.0 : evaluate(result.final_params, spec, test_set, cfg.threads).total_accuracy();
        record.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();

        if (record.test_accuracy > best_accuracy) {
            best_accuracy = record.test_accuracy;
            result.best_params = result.final_params;
            result.history.best_epoch = static_cast<int>(result.history.epochs.size());
        }
        result.history.epochs.push_back(record);
        if (on_epoch) on_epoch(record);
        if (stopper.update(record.test_accuracy)) break;
    }
    return result;
}

std::string history_csv(const TrainHistory& history, bool with_wall_time) {
    std::ostringstream out;
    out << "epoch,train_acc,test_acc,mean_loss,lr,seconds\n";
    char line[256];
    for (const auto& e : history.epochs) {
        std::snprintf(line, sizeof line, "%d,%.17g,%.17g,%.17g,%.17g,", e.epoch, e.train_accuracy, e.test_accuracy,
                      e.mean_loss, e.learning_rate);
        out << line;
        if (with_wall_time) {
            std::snprintf(line, sizeof line, "%.3f", e.seconds);
            out << line;
        }
        out << "\n";
    }
    return out.str();
}

void write_history_csv(const std::filesystem::path& path, const TrainHistory& history, bool with_wall_time) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
    out << history_csv(history, with_wall_time);
    if (!out) throw std::runtime_error("write failed for " + path.string());
}

}  // namespace stegcnn
