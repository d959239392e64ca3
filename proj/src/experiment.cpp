#include "stegcnn/experiment.hpp"

#include <algorithm>
#include <charconv>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>

#include "stegcnn/pgm.hpp"

namespace stegcnn {

namespace fs = std::filesystem;

namespace {

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

std::string exact(double v) {
    char buf[32];
    const auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

template <typename T>
T parse_number(const std::string& key, const std::string& value) {
    T out{};
    const auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), out);
    if (ec != std::errc{} || ptr != value.data() + value.size())
        throw ConfigError("invalid value '" + value + "' for " + key);
    return out;
}

bool parse_bool(const std::string& key, const std::string& value) {
    if (value == "true" || value == "1" || value == "yes") return true;
    if (value == "false" || value == "0" || value == "no") return false;
    throw ConfigError("invalid boolean '" + value + "' for " + key);
}

template <typename F>
auto rethrow_as_config(const std::string& key, F&& f) {
    try {
        return f();
    } catch (const std::invalid_argument& e) {
        throw ConfigError(key + ": " + e.what());
    }
}

void write_text(const fs::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
    out << text;
    if (!out) throw std::runtime_error("write failed: " + path.string());
}

std::string comment_block(const std::vector<std::pair<std::string, std::string>>& meta) {
    std::string out;
    for (const auto& [k, v] : meta) out += "# " + k + " " + v + "\n";
    return out;
}

std::vector<std::string> as_lines(const std::vector<std::pair<std::string, std::string>>& meta) {
    std::vector<std::string> lines;
    for (const auto& [k, v] : meta) lines.push_back(k + " " + v);
    return lines;
}

std::string indexed_name(const char* stem, std::size_t i) {
    char buf[48];
    std::snprintf(buf, sizeof buf, "%s_%05zu.pgm", stem, i);
    return buf;
}

struct LoadedPairs {
    std::vector<ImageGrid> covers;
    std::vector<ImageGrid> stegos;
};

// Covers and stegos of a corpus manifest indexed by source_id, which must
// run 0..n-1 with exactly one image of each label.
LoadedPairs load_pairs(const fs::path& manifest) {
    if (!fs::exists(manifest)) throw ConfigError("corpus manifest not found: " + manifest.string());
    const auto entries = read_corpus_manifest(manifest);
    if (entries.empty()) throw ConfigError("corpus manifest is empty: " + manifest.string());
    const std::size_t pairs = entries.size() / 2;
    std::vector<std::optional<ImageGrid>> slots[2] = {std::vector<std::optional<ImageGrid>>(pairs),
                                                      std::vector<std::optional<ImageGrid>>(pairs)};
    for (const auto& e : entries) {
        if (entries.size() % 2 != 0 || e.source_id >= pairs)
            throw ConfigError(manifest.string() + ": source ids must pair covers and stegos as 0..n-1");
        auto& slot = slots[e.label][e.source_id];
        if (slot) throw ConfigError(manifest.string() + ": duplicate entry for source " + std::to_string(e.source_id));
        slot = load_pgm(manifest.parent_path() / e.path);
    }
    LoadedPairs out;
    for (std::size_t i = 0; i < pairs; ++i) {
        if (!slots[0][i] || !slots[1][i])
            throw ConfigError(manifest.string() + ": source " + std::to_string(i) + " lacks a cover or a stego");
        out.covers.push_back(std::move(*slots[0][i]));
        out.stegos.push_back(std::move(*slots[1][i]));
    }
    return out;
}

Checkpoint make_checkpoint(const ExperimentConfig& cfg, const ParameterStore& params, int epoch,
                           const NormalizationStats& stats, const std::string& kind) {
    Checkpoint ckpt{params, epoch, stats, provenance(cfg)};
    ckpt.metadata.emplace_back("kind", kind);
    return ckpt;
}

}  // namespace

// ---------------------------------------------------------------- config

void ExperimentConfig::validate() const {
    auto require = [](bool ok, const std::string& what) {
        if (!ok) throw ConfigError(what);
    };
    require(image_size >= 8, "image_size must be >= 8");
    require(cover_count >= 2, "cover_count must be >= 2");
    require(split_ratio > 0.0 && split_ratio < 1.0, "split_ratio must be in (0, 1)");
    require(layer2_kernels >= 1, "layer2_kernels must be >= 1");
    require(!out_dir.empty(), "out_dir must not be empty");
    if (stego.algorithm == StegoAlgorithm::dct_lsb)
        require(image_size % 8 == 0, "dct_lsb needs image_size divisible by 8");
    rethrow_as_config("stego", [&] { stego.validate(); });
    rethrow_as_config("train", [&] { train.validate(); });
    const auto split = split_pairs(cover_count, split_ratio, split_seed);
    require(!split.train.empty() && !split.test.empty(), "split_ratio leaves an empty train or test split");
    require(static_cast<std::size_t>(train.batch_size) <= 2 * split.train.size(),
            "batch_size exceeds the training set (" + std::to_string(2 * split.train.size()) + " images)");
}

void apply_setting(ExperimentConfig& cfg, const std::string& assignment) {
    const auto eq = assignment.find('=');
    if (eq == std::string::npos) throw ConfigError("expected key=value, got '" + assignment + "'");
    const std::string key = trim(assignment.substr(0, eq));
    const std::string value = trim(assignment.substr(eq + 1));
    if (value.empty()) throw ConfigError("empty value for " + key);

    if (key == "image_size") cfg.image_size = parse_number<int>(key, value);
    else if (key == "cover_count") cfg.cover_count = parse_number<std::size_t>(key, value);
    else if (key == "cover_seed") cfg.cover_seed = parse_number<std::uint64_t>(key, value);
    else if (key == "algorithm") cfg.stego.algorithm = rethrow_as_config(key, [&] { return parse_algorithm(value); });
    else if (key == "payload") cfg.stego.payload = parse_number<double>(key, value);
    else if (key == "key_mode") cfg.stego.key_mode = rethrow_as_config(key, [&] { return parse_key_mode(value); });
    else if (key == "key_seed") cfg.stego.key_seed = parse_number<std::uint64_t>(key, value);
    else if (key == "message_seed") cfg.stego.message_seed = parse_number<std::uint64_t>(key, value);
    else if (key == "split_ratio") cfg.split_ratio = parse_number<double>(key, value);
    else if (key == "split_seed") cfg.split_seed = parse_number<std::uint64_t>(key, value);
    else if (key == "layer2_kernels") cfg.layer2_kernels = parse_number<int>(key, value);
    else if (key == "init_seed") cfg.init_seed = parse_number<std::uint64_t>(key, value);
    else if (key == "batch_size") cfg.train.batch_size = parse_number<int>(key, value);
    else if (key == "lr") cfg.train.lr0 = parse_number<double>(key, value);
    else if (key == "lr_decay") cfg.train.lr_decay = parse_number<double>(key, value);
    else if (key == "momentum") cfg.train.momentum = parse_number<double>(key, value);
    else if (key == "max_epochs") cfg.train.max_epochs = parse_number<int>(key, value);
    else if (key == "patience") {
        const int p = parse_number<int>(key, value);
        if (p < 0) throw ConfigError("patience must be >= 0");
        cfg.train.patience = p == 0 ? std::nullopt : std::optional<int>(p);
    } else if (key == "shuffle_seed") cfg.train.shuffle_seed = parse_number<std::uint64_t>(key, value);
    else if (key == "threads") cfg.train.threads = parse_number<int>(key, value);
    else if (key == "out_dir") cfg.out_dir = value;
    else if (key == "record_wall_time") cfg.record_wall_time = parse_bool(key, value);
    else throw ConfigError("unknown config key '" + key + "'");
}

ExperimentConfig parse_config(const std::string& text, ExperimentConfig base) {
    std::istringstream in(text);
    std::string line;
    for (int number = 1; std::getline(in, line); ++number) {
        line = trim(line.substr(0, line.find('#')));
        if (line.empty()) continue;
        try {
            apply_setting(base, line);
        } catch (const ConfigError& e) {
            throw ConfigError("line " + std::to_string(number) + ": " + e.what());
        }
    }
    return base;
}

ExperimentConfig load_config(const fs::path& path, ExperimentConfig base) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot read config " + path.string());
    std::stringstream buf;
    buf << in.rdbuf();
    try {
        return parse_config(buf.str(), std::move(base));
    } catch (const ConfigError& e) {
        throw ConfigError(path.string() + ": " + e.what());
    }
}

namespace {

std::vector<std::pair<std::string, std::string>> result_settings(const ExperimentConfig& c) {
    return {
        {"image_size", std::to_string(c.image_size)},
        {"cover_count", std::to_string(c.cover_count)},
        {"cover_seed", std::to_string(c.cover_seed)},
        {"algorithm", to_string(c.stego.algorithm)},
        {"payload", exact(c.stego.payload)},
        {"key_mode", to_string(c.stego.key_mode)},
        {"key_seed", std::to_string(c.stego.key_seed)},
        {"message_seed", std::to_string(c.stego.message_seed)},
        {"split_ratio", exact(c.split_ratio)},
        {"split_seed", std::to_string(c.split_seed)},
        {"layer2_kernels", std::to_string(c.layer2_kernels)},
        {"init_seed", std::to_string(c.init_seed)},
        {"batch_size", std::to_string(c.train.batch_size)},
        {"lr", exact(c.train.lr0)},
        {"lr_decay", exact(c.train.lr_decay)},
        {"momentum", exact(c.train.momentum)},
        {"max_epochs", std::to_string(c.train.max_epochs)},
        {"patience", std::to_string(c.train.patience.value_or(0))},
        {"shuffle_seed", std::to_string(c.train.shuffle_seed)},
    };
}

}  // namespace

std::string config_text(const ExperimentConfig& cfg) {
    std::string out;
    for (const auto& [k, v] : result_settings(cfg)) out += k + " = " + v + "\n";
    out += "threads = " + std::to_string(cfg.train.threads) + "\n";
    out += "out_dir = " + cfg.out_dir.string() + "\n";
    out += std::string("record_wall_time = ") + (cfg.record_wall_time ? "true" : "false") + "\n";
    return out;
}

std::string config_digest(const ExperimentConfig& cfg) {
    std::uint64_t h = 0xcbf29ce484222325ull;
    for (const auto& [k, v] : result_settings(cfg))
        for (const char c : k + "=" + v + "\n") {
            h ^= static_cast<unsigned char>(c);
            h *= 0x100000001b3ull;
        }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

std::vector<std::pair<std::string, std::string>> provenance(const ExperimentConfig& cfg) {
    std::vector<std::pair<std::string, std::string>> meta{{"config_digest", config_digest(cfg)}};
    for (auto& kv : result_settings(cfg)) meta.push_back(std::move(kv));
    return meta;
}

// ---------------------------------------------------------------- in memory

std::vector<ImageGrid> embed_all(const std::vector<ImageGrid>& covers, const std::vector<std::uint64_t>& indices,
                                 const StegoConfig& stego) {
    std::vector<ImageGrid> out;
    out.reserve(covers.size());
    for (std::size_t i = 0; i < covers.size(); ++i) out.push_back(embed(covers[i], stego, indices[i]).stego);
    return out;
}

GeneratedCorpus generate_corpus(const ExperimentConfig& cfg) {
    cfg.validate();
    GeneratedCorpus corpus;
    corpus.covers = synth_covers(cfg.cover_seed, cfg.cover_count, cfg.image_size);
    for (std::size_t i = 0; i < corpus.covers.size(); ++i) {
        EmbedResult r = embed(corpus.covers[i], cfg.stego, i);
        corpus.modified.push_back(r.modified_count);
        corpus.stegos.push_back(std::move(r.stego));
    }
    return corpus;
}

TrainResult train_corpus(const ExperimentConfig& cfg, const GeneratedCorpus& corpus, const EpochCallback& on_epoch) {
    auto [train_set, test_set] = assemble(corpus.covers, corpus.stegos, cfg.split_ratio, cfg.split_seed);
    const NetworkSpec spec = cfg.network();
    return train(build_network(spec, cfg.init_seed), spec, train_set, test_set, cfg.train, on_epoch);
}

// ---------------------------------------------------------------- commands

GenerateSummary cmd_generate(const ExperimentConfig& cfg) {
    const GeneratedCorpus corpus = generate_corpus(cfg);
    fs::create_directories(cfg.out_dir / "covers");
    fs::create_directories(cfg.out_dir / "stego");

    std::vector<ManifestEntry> entries;
    std::string csv = comment_block(provenance(cfg)) + "index,modified_count\n";
    double total = 0.0;
    for (std::size_t i = 0; i < corpus.covers.size(); ++i) {
        const std::string cover = "covers/" + indexed_name("cover", i);
        const std::string stego = "stego/" + indexed_name("stego", i);
        save_pgm(corpus.covers[i], cfg.out_dir / cover);
        save_pgm(corpus.stegos[i], cfg.out_dir / stego);
        entries.push_back({cover, 0, i});
        entries.push_back({stego, 1, i});
        csv += std::to_string(i) + "," + std::to_string(corpus.modified[i]) + "\n";
        total += static_cast<double>(corpus.modified[i]);
    }
    const fs::path manifest = cfg.out_dir / "corpus.manifest";
    write_corpus_manifest(manifest, entries, as_lines(provenance(cfg)));
    write_text(cfg.out_dir / "modifications.csv", csv);
    return {manifest, corpus.covers.size(), total / static_cast<double>(corpus.covers.size())};
}

std::size_t cmd_generate_batch(const ExperimentConfig& cfg, const fs::path& batch_manifest) {
    if (!fs::exists(batch_manifest)) throw ConfigError("batch manifest not found: " + batch_manifest.string());
    const auto records = read_batch_manifest(batch_manifest);
    const fs::path base = batch_manifest.parent_path();
    fs::create_directories(cfg.out_dir);
    std::string csv = "# message_seed " + std::to_string(cfg.stego.message_seed) + "\nindex,output,modified_count\n";
    for (std::size_t i = 0; i < records.size(); ++i) {
        const BatchRecord& r = records[i];
        StegoConfig sc{r.algorithm, r.payload, r.key_mode, r.key_seed, cfg.stego.message_seed};
        rethrow_as_config("record " + std::to_string(i + 1), [&] { sc.validate(); });
        const EmbedResult res = embed(load_pgm(base / r.cover_path), sc, i);
        const fs::path out = base / r.output_path;
        if (out.has_parent_path()) fs::create_directories(out.parent_path());
        save_pgm(res.stego, out);
        csv += std::to_string(i) + "," + r.output_path + "," + std::to_string(res.modified_count) + "\n";
    }
    write_text(cfg.out_dir / "batch_modifications.csv", csv);
    return records.size();
}

TrainSummary cmd_train(const ExperimentConfig& cfg, const EpochCallback& on_epoch) {
    cfg.validate();
    LoadedPairs pairs = load_pairs(cfg.out_dir / "corpus.manifest");
    if (pairs.covers.size() != cfg.cover_count)
        throw ConfigError("corpus holds " + std::to_string(pairs.covers.size()) + " pairs but cover_count is " +
                          std::to_string(cfg.cover_count));
    if (pairs.covers.front().height() != cfg.image_size || pairs.covers.front().width() != cfg.image_size)
        throw ConfigError("corpus images do not match image_size " + std::to_string(cfg.image_size));

    auto [train_set, test_set] = assemble(pairs.covers, pairs.stegos, cfg.split_ratio, cfg.split_seed);
    const NetworkSpec spec = cfg.network();
    const TrainResult result = train(build_network(spec, cfg.init_seed), spec, train_set, test_set, cfg.train, on_epoch);

    const auto meta = provenance(cfg);
    write_text(cfg.out_dir / "history.csv",
               comment_block(meta) + history_csv(result.history, cfg.record_wall_time));
    const int best_epoch = result.history.best_epoch < 0 ? 0 : result.history.epochs[result.history.best_epoch].epoch;
    const int last_epoch = result.history.epochs.empty() ? 0 : result.history.epochs.back().epoch;
    save_checkpoint(cfg.out_dir / "best.ckpt", make_checkpoint(cfg, result.best_params, best_epoch, train_set.stats, "best"));
    save_checkpoint(cfg.out_dir / "final.ckpt",
                    make_checkpoint(cfg, result.final_params, last_epoch, train_set.stats, "final"));

    TrainSummary summary{result.history, evaluate(result.best_params, spec, test_set, cfg.train.threads)};
    auto lines = as_lines(meta);
    lines.push_back("checkpoint best (epoch " + std::to_string(best_epoch) + ")");
    lines.push_back("evaluated on the test split (" + std::to_string(test_set.size()) + " images)");
    write_text(cfg.out_dir / "report.txt", format_report(summary.best_test, lines));
    return summary;
}

EvalSplit parse_split(const std::string& text) {
    if (text == "all") return EvalSplit::all;
    if (text == "train") return EvalSplit::train;
    if (text == "test") return EvalSplit::test;
    throw ConfigError("unknown split '" + text + "' (expected all, train or test)");
}

DetectionReport cmd_eval(const EvalOptions& opts) {
    if (!fs::exists(opts.checkpoint)) throw ConfigError("checkpoint not found: " + opts.checkpoint.string());
    const Checkpoint ckpt = load_checkpoint(opts.checkpoint);
    const NetworkSpec& spec = ckpt.spec();

    // Size check before loading the whole corpus or running any inference.
    const auto entries = read_corpus_manifest(opts.manifest);
    if (entries.empty()) throw ConfigError("corpus manifest is empty: " + opts.manifest.string());
    const ImageGrid probe = load_pgm(opts.manifest.parent_path() / entries.front().path);
    if (probe.height() != spec.input_size || probe.width() != spec.input_size)
        throw ConfigError("checkpoint expects " + std::to_string(spec.input_size) + "x" +
                          std::to_string(spec.input_size) + " images, corpus has " + std::to_string(probe.height()) +
                          "x" + std::to_string(probe.width()));

    auto meta_value = [&](const std::string& key) {
        const auto v = ckpt.meta(key);
        if (!v) throw ConfigError("checkpoint lacks '" + key + "' metadata");
        return *v;
    };

    LoadedPairs pairs = load_pairs(opts.manifest);
    std::vector<std::size_t> chosen(pairs.covers.size());
    for (std::size_t i = 0; i < chosen.size(); ++i) chosen[i] = i;
    if (opts.split != EvalSplit::all) {
        const double ratio = parse_number<double>("split_ratio", meta_value("split_ratio"));
        const auto seed = parse_number<std::uint64_t>("split_seed", meta_value("split_seed"));
        const SplitIndices split = split_pairs(pairs.covers.size(), ratio, seed);
        chosen = opts.split == EvalSplit::train ? split.train : split.test;
    }

    std::vector<std::pair<std::string, std::string>> notes = ckpt.metadata;
    notes.emplace_back("checkpoint_epoch", std::to_string(ckpt.epoch));
    notes.emplace_back("corpus", opts.manifest.filename().string());
    notes.emplace_back("split", opts.split == EvalSplit::all ? "all" : opts.split == EvalSplit::train ? "train" : "test");
    if (opts.payload) {
        StegoConfig sc;
        sc.algorithm = rethrow_as_config("algorithm", [&] { return parse_algorithm(meta_value("algorithm")); });
        sc.key_mode = rethrow_as_config("key_mode", [&] { return parse_key_mode(meta_value("key_mode")); });
        sc.key_seed = parse_number<std::uint64_t>("key_seed", meta_value("key_seed"));
        sc.message_seed = parse_number<std::uint64_t>("message_seed", meta_value("message_seed"));
        sc.payload = *opts.payload;
        rethrow_as_config("payload", [&] { sc.validate(); });
        std::vector<std::uint64_t> ids(pairs.covers.size());
        for (std::size_t i = 0; i < ids.size(); ++i) ids[i] = i;
        pairs.stegos = embed_all(pairs.covers, ids, sc);
        notes.emplace_back("eval_payload", exact(*opts.payload));
    }

    const Corpus corpus = normalize_with(paired_corpus(pairs.covers, pairs.stegos, chosen), ckpt.stats);
    const DetectionReport report = evaluate(ckpt.params, spec, corpus, opts.threads);
    if (opts.report) write_text(*opts.report, format_report(report, as_lines(notes)));
    return report;
}

GradCheckReport cmd_gradcheck(std::uint64_t seed, int size, const std::optional<std::string>& fault_class) {
    if (size < 4 || size > 16) throw ConfigError("gradcheck size must be in 4..16");
    GradCheckOptions opts;
    opts.fault_class = fault_class;
    return rethrow_as_config("gradcheck", [&] { return gradient_check(size, seed, opts); });
}

}  // namespace stegcnn
