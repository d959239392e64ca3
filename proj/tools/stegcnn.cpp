// stegcnn: corpus generation, training, evaluation and gradient checks.
//
// Exit codes: 0 success, 1 verification failure (gradcheck), 2 usage or
// configuration error.

#include <cstdio>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "stegcnn/experiment.hpp"
#include "stegcnn/simd.hpp"

using namespace stegcnn;

namespace {

constexpr int exit_ok = 0;
constexpr int exit_failed = 1;
constexpr int exit_usage = 2;

struct ConfigArgs {
    std::string file;
    std::vector<std::string> settings;
    std::string out_dir;
};

void add_config_options(CLI::App* cmd, ConfigArgs& args) {
    cmd->add_option("-c,--config", args.file, "key = value config file")->check(CLI::ExistingFile);
    cmd->add_option("-s,--set", args.settings, "override one setting (key=value); repeatable");
    cmd->add_option("-o,--out", args.out_dir, "output directory (same as --set out_dir=...)");
}

ExperimentConfig resolve(const ConfigArgs& args) {
    ExperimentConfig cfg = args.file.empty() ? ExperimentConfig{} : load_config(args.file);
    for (const auto& s : args.settings) apply_setting(cfg, s);
    if (!args.out_dir.empty()) cfg.out_dir = args.out_dir;
    cfg.validate();
    return cfg;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Steganalysis workbench: synthetic cover/stego corpora and a two-layer CNN detector"};
    app.require_subcommand(1);

    ConfigArgs gen_args;
    std::string batch;
    auto* gen = app.add_subcommand("generate", "write covers, stego twins, corpus.manifest and modifications.csv");
    add_config_options(gen, gen_args);
    gen->add_option("--batch", batch, "embed the records of a batch manifest instead of synthesizing a corpus")
        ->check(CLI::ExistingFile);

    ConfigArgs train_args;
    bool quiet = false;
    auto* trn = app.add_subcommand("train", "train on out_dir/corpus.manifest; write history, checkpoints, report");
    add_config_options(trn, train_args);
    trn->add_flag("-q,--quiet", quiet, "no per-epoch progress on stderr");

    EvalOptions eval_opts;
    std::string split = "all";
    std::string report;
    std::optional<double> payload;
    auto* ev = app.add_subcommand("eval", "evaluate a checkpoint on a corpus manifest");
    ev->add_option("--checkpoint", eval_opts.checkpoint, "checkpoint file")->required();
    ev->add_option("--manifest", eval_opts.manifest, "corpus manifest")->required()->check(CLI::ExistingFile);
    ev->add_option("--split", split, "all | train | test (uses the checkpoint's split seed and ratio)");
    ev->add_option("--payload", payload, "re-embed the covers at this payload (cross-payload evaluation)");
    ev->add_option("--report", report, "write the report here (default: print only)");
    ev->add_option("--threads", eval_opts.threads, "worker threads, 0 = hardware");

    std::uint64_t gc_seed = 1;
    int gc_size = 8;
    std::string fault;
    auto* gc = app.add_subcommand("gradcheck", "finite-difference check of backpropagation");
    gc->add_option("--seed", gc_seed, "network and input seed");
    gc->add_option("--size", gc_size, "input side (4..16)");
    gc->add_option("--inject-fault", fault,
                   "test hook: perturb the analytic gradient of one class (e.g. layer2.weights) by 1e-2");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return exit_usage;
    }

    try {
        if (*gen) {
            const ExperimentConfig cfg = resolve(gen_args);
            if (!batch.empty()) {
                const std::size_t n = cmd_generate_batch(cfg, batch);
                std::printf("embedded %zu batch records\n", n);
            } else {
                const GenerateSummary s = cmd_generate(cfg);
                std::printf("wrote %zu cover/stego pairs to %s (mean modified pixels %.2f, digest %s)\n", s.pairs,
                            s.manifest.string().c_str(), s.mean_modified, config_digest(cfg).c_str());
            }
        } else if (*trn) {
            const ExperimentConfig cfg = resolve(train_args);
            std::fprintf(stderr, "training %s on %s kernels (digest %s)\n", describe(cfg.network()).c_str(),
                         std::string(simd::isa_name(simd::active_isa())).c_str(), config_digest(cfg).c_str());
            EpochCallback progress;
            if (!quiet)
                progress = [](const EpochRecord& e) {
                    std::fprintf(stderr, "epoch %4d  train %.4f  test %.4f  loss %.5f  lr %.6g  %.2fs\n", e.epoch,
                                 e.train_accuracy, e.test_accuracy, e.mean_loss, e.learning_rate, e.seconds);
                };
            const TrainSummary s = cmd_train(cfg, progress);
            std::cout << format_report(s.best_test);
        } else if (*ev) {
            eval_opts.split = parse_split(split);
            eval_opts.payload = payload;
            if (!report.empty()) eval_opts.report = report;
            std::cout << format_report(cmd_eval(eval_opts));
        } else if (*gc) {
            const GradCheckReport r = cmd_gradcheck(gc_seed, gc_size, fault.empty() ? std::nullopt : std::optional(fault));
            std::cout << format_gradcheck(r);
            return r.passed() ? exit_ok : exit_failed;
        }
    } catch (const ConfigError& e) {
        std::fprintf(stderr, "stegcnn: %s\n", e.what());
        return exit_usage;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "stegcnn: %s\n", e.what());
        return exit_usage;
    }
    return exit_ok;
}
