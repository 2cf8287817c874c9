// advprop: adversarial back-propagation training toolkit.
//
// Subcommands: train, eval, attack, inspect, repro. Exit codes: 0 success,
// 1 usage/config error, 2 data or file-format error, 3 internal failure.

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <optional>

#include <CLI11.hpp>

#include "advprop/checkpoint.hpp"
#include "advprop/config.hpp"
#include "advprop/errors.hpp"
#include "advprop/metrics.hpp"
#include "advprop/trainer.hpp"

namespace fs = std::filesystem;
using namespace advprop;

namespace {

struct DataFlags {
    std::string dataset;  // "", "mnist", "cifar10"
    std::string split = "test";
    std::string dir;
};

fs::path resolve_data_dir(const std::string& flag_dir, const std::string& cfg_dir) {
    if (!flag_dir.empty()) return flag_dir;
    if (!cfg_dir.empty()) return cfg_dir;
    if (const char* env = std::getenv("ADVPROP_DATA_DIR")) return env;
    throw DataError(
        "no dataset root given: pass --data-dir, set data.dir in the config, or export "
        "ADVPROP_DATA_DIR");
}

Dataset load_raw(DatasetKind kind, const fs::path& root, bool train_split) {
    if (kind == DatasetKind::Mnist) {
        try {
            return load_mnist(root, train_split);
        } catch (const FormatError& e) {
            throw FormatError(std::string(e.what()) +
                              "\nexpected MNIST IDX files under " + root.string() +
                              ": train-images-idx3-ubyte, train-labels-idx1-ubyte, "
                              "t10k-images-idx3-ubyte, t10k-labels-idx1-ubyte");
        }
    }
    const fs::path nested = root / "cifar-10-batches-bin";
    const fs::path dir = fs::exists(nested / "data_batch_1.bin") ? nested : root;
    try {
        auto [train, test] = load_cifar10(dir);
        return train_split ? std::move(train) : std::move(test);
    } catch (const FormatError& e) {
        throw FormatError(std::string(e.what()) + "\nexpected CIFAR-10 binary batches under " +
                          dir.string() + ": data_batch_1..5.bin and test_batch.bin");
    }
}

DatasetKind dataset_kind_for(const std::string& flag, std::size_t input_dim) {
    if (flag == "mnist") return DatasetKind::Mnist;
    if (flag == "cifar10") return DatasetKind::Cifar10;
    if (!flag.empty()) throw ConfigError("unknown dataset '" + flag + "' (mnist|cifar10)");
    if (input_dim == 784) return DatasetKind::Mnist;
    if (input_dim == 3072) return DatasetKind::Cifar10;
    throw ConfigError("cannot infer the dataset from input width " +
                      std::to_string(input_dim) + "; pass --dataset");
}

/// Loads and preprocesses an evaluation split the way the checkpointed
/// model expects, using the training run's transform sidecar when the
/// preprocessing carries fitted parameters.
Dataset load_for_model(const LoadedCheckpoint& ckpt, const fs::path& ckpt_path,
                       const DataFlags& flags, const std::string& transform_path) {
    const DatasetKind kind = dataset_kind_for(flags.dataset, ckpt.net.input_dim());
    if (flags.split != "train" && flags.split != "test") {
        throw ConfigError("unknown split '" + flags.split + "' (train|test)");
    }
    const fs::path root = resolve_data_dir(flags.dir, "");
    Dataset ds = load_raw(kind, root, flags.split == "train");

    switch (ckpt.meta.preprocess) {
        case PreprocessCode::Raw:
            return ds;
        case PreprocessCode::Scale01:
            return scale_01(std::move(ds));
        default: {
            fs::path sidecar = transform_path.empty()
                                   ? ckpt_path.parent_path() / "transforms.abpt"
                                   : fs::path(transform_path);
            if (!fs::exists(sidecar)) {
                throw DataError("model was trained on transformed data but the transform "
                                "sidecar is missing: " +
                                sidecar.string() + " (pass --transform)");
            }
            std::uint64_t sidecar_hash = 0;
            FittedTransforms pipeline = load_transform_sidecar(sidecar, &sidecar_hash);
            if (sidecar_hash != ckpt.meta.config_hash) {
                throw DataError("preprocessing mismatch: sidecar " + sidecar.string() +
                                " was fitted by a different run (config hash differs); "
                                "refusing to evaluate");
            }
            return apply_pipeline(pipeline, std::move(ds));
        }
    }
}

void write_text(const fs::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw FormatError("cannot open " + path.string() + " for writing");
    out << text;
}

struct TrainArtifacts {
    fs::path checkpoint;
    TrainOutcome outcome;
};

/// Runs one training job end to end: data, preprocessing, manifest,
/// metrics/timing logs, sidecar and final checkpoint.
TrainArtifacts run_training(const ExperimentConfig& cfg, bool quiet) {
    const fs::path out_dir = cfg.output.dir;
    fs::create_directories(out_dir);

    const fs::path root = resolve_data_dir("", cfg.data.dir);
    Dataset raw_train = load_raw(cfg.data.dataset, root, true);
    Dataset raw_test = load_raw(cfg.data.dataset, root, false);

    const FittedTransforms pipeline =
        fit_pipeline(cfg.data.preprocessing, raw_train, cfg.data.zca_regularizer);
    Dataset train = apply_pipeline(pipeline, std::move(raw_train));
    Dataset test = apply_pipeline(pipeline, std::move(raw_test));

    std::optional<Dataset> val;
    if (cfg.data.validation_size > 0) {
        auto [tr, v] = split_validation(train, cfg.data.validation_size);
        train = std::move(tr);
        val = std::move(v);
    }

    write_manifest(out_dir / "manifest.ini", cfg);
    const std::uint64_t hash = config_hash(cfg);
    const bool fitted = preprocess_needs_sidecar(cfg.preprocess_code());
    if (fitted) save_transform_sidecar(out_dir / "transforms.abpt", hash, pipeline);

    std::ofstream metrics(out_dir / "metrics.log", std::ios::trunc);
    std::ofstream timing(out_dir / "timing.log", std::ios::trunc);

    TrainArtifacts artifacts;
    artifacts.outcome =
        train_model(cfg, train, val ? &*val : nullptr, &test, &metrics,
                    &timing, quiet ? nullptr : &std::cout);

    CheckpointMeta meta;
    meta.epoch = artifacts.outcome.epochs_run;
    meta.seed = cfg.train.seed;
    meta.config_hash = hash;
    meta.preprocess = cfg.preprocess_code();
    artifacts.checkpoint = out_dir / "checkpoint.abpc";
    save_checkpoint(artifacts.checkpoint, artifacts.outcome.net, meta);
    return artifacts;
}

std::string units_label(Activation a) {
    switch (a) {
        case Activation::Relu: return "ReLU";
        case Activation::Tanh: return "tanh";
        default: return to_string(a);
    }
}

std::string arch_label(const std::vector<std::size_t>& arch) {
    // "2x400" when the hidden widths agree, otherwise the full chain.
    if (arch.size() >= 3) {
        bool uniform = true;
        for (std::size_t i = 2; i + 1 < arch.size(); ++i) {
            if (arch[i] != arch[1]) uniform = false;
        }
        if (uniform) {
            return std::to_string(arch.size() - 2) + "x" + std::to_string(arch[1]);
        }
    }
    std::string s;
    for (std::size_t i = 0; i < arch.size(); ++i) {
        if (i) s += "-";
        s += std::to_string(arch[i]);
    }
    return s;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"adversarial back-propagation training toolkit"};
    app.require_subcommand(1);

    // train
    auto* train_cmd = app.add_subcommand("train", "train a model from a config or preset");
    std::string cfg_path, preset_name, mode_flag, out_dir, data_dir;
    std::optional<std::uint64_t> seed_flag;
    std::optional<double> epsilon_flag;
    std::optional<std::size_t> epochs_flag, val_size_flag;
    bool quiet = false;
    train_cmd->add_option("--config", cfg_path, "experiment config file (INI)");
    train_cmd->add_option("--preset", preset_name, "named preset configuration");
    train_cmd->add_option("--seed", seed_flag, "override train.seed");
    train_cmd->add_option("--mode", mode_flag, "standard|adversarial");
    train_cmd->add_option("--epsilon", epsilon_flag, "override adversarial.epsilon");
    train_cmd->add_option("--out", out_dir, "override output.dir");
    train_cmd->add_option("--epochs", epochs_flag, "override train.epochs");
    train_cmd->add_option("--validation-size", val_size_flag,
                          "override data.validation_size");
    train_cmd->add_option("--data-dir", data_dir,
                          "dataset root (default: $ADVPROP_DATA_DIR)");
    train_cmd->add_flag("--quiet", quiet, "suppress per-epoch console output");

    // eval
    auto* eval_cmd = app.add_subcommand("eval", "evaluate a checkpoint on a dataset split");
    std::string eval_ckpt, eval_out, transform_path;
    DataFlags eval_data;
    eval_cmd->add_option("checkpoint", eval_ckpt, "checkpoint file")->required();
    eval_cmd->add_option("--dataset", eval_data.dataset, "mnist|cifar10 (default: inferred)");
    eval_cmd->add_option("--split", eval_data.split, "train|test (default test)");
    eval_cmd->add_option("--data-dir", eval_data.dir, "dataset root");
    eval_cmd->add_option("--transform", transform_path, "transform sidecar (.abpt)");
    eval_cmd->add_option("--out", eval_out, "also write the report record to this file");

    // attack
    auto* attack_cmd = app.add_subcommand(
        "attack", "cross-model robustness: perturb with one model, evaluate another");
    std::string src_ckpt, tgt_ckpt, attack_out, attack_transform;
    double attack_eps = 0.25;  // common magnitudes: 0.25 and 0.50
    DataFlags attack_data;
    attack_cmd->add_option("source", src_ckpt, "checkpoint used to build the perturbed set")
        ->required();
    attack_cmd->add_option("target", tgt_ckpt, "checkpoint being evaluated")->required();
    attack_cmd->add_option("--epsilon", attack_eps,
                           "perturbation magnitude (typical: 0.25 or 0.50)");
    attack_cmd->add_option("--dataset", attack_data.dataset, "mnist|cifar10");
    attack_cmd->add_option("--split", attack_data.split, "train|test (default test)");
    attack_cmd->add_option("--data-dir", attack_data.dir, "dataset root");
    attack_cmd->add_option("--transform", attack_transform, "transform sidecar (.abpt)");
    attack_cmd->add_option("--out", attack_out, "also write the report record to this file");

    // inspect
    auto* inspect_cmd =
        app.add_subcommand("inspect", "filter images or activation sparsity of a checkpoint");
    std::string ins_ckpt, filters_out, ins_transform;
    std::size_t layer_index = 0;
    bool want_sparsity = false;
    DataFlags ins_data;
    inspect_cmd->add_option("checkpoint", ins_ckpt, "checkpoint file")->required();
    inspect_cmd->add_option("--filters", filters_out,
                            "write the layer's filter grid image (PGM/PPM) here");
    inspect_cmd->add_option("--layer", layer_index, "layer to render (default 0)");
    inspect_cmd->add_flag("--sparsity", want_sparsity,
                          "report exact-zero activation fractions over a dataset");
    inspect_cmd->add_option("--dataset", ins_data.dataset, "mnist|cifar10");
    inspect_cmd->add_option("--split", ins_data.split, "train|test (default test)");
    inspect_cmd->add_option("--data-dir", ins_data.dir, "dataset root");
    inspect_cmd->add_option("--transform", ins_transform, "transform sidecar (.abpt)");

    // repro
    auto* repro_cmd =
        app.add_subcommand("repro", "run a preset several times and aggregate the errors");
    std::string repro_preset, repro_out = "repro-out", repro_data_dir;
    std::size_t runs = 5;
    std::uint64_t base_seed = 1;
    std::optional<std::size_t> repro_epochs;
    repro_cmd->add_option("experiment", repro_preset, "preset name")->required();
    repro_cmd->add_option("--runs", runs, "number of seeded runs (default 5)");
    repro_cmd->add_option("--seed", base_seed, "base seed; run i uses seed base+i");
    repro_cmd->add_option("--out", repro_out, "output directory");
    repro_cmd->add_option("--epochs", repro_epochs, "override train.epochs");
    repro_cmd->add_option("--data-dir", repro_data_dir, "dataset root");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0) return app.exit(e);  // --help
        app.exit(e);
        return 1;
    }

    try {
        if (train_cmd->parsed()) {
            if (cfg_path.empty() == preset_name.empty()) {
                throw ConfigError("train: pass exactly one of --config or --preset");
            }
            ExperimentConfig cfg =
                cfg_path.empty() ? preset(preset_name) : parse_config_file(cfg_path);
            if (seed_flag) cfg.train.seed = *seed_flag;
            if (epsilon_flag) cfg.adversarial.epsilon = *epsilon_flag;
            if (!mode_flag.empty()) {
                if (mode_flag == "standard") {
                    cfg.adversarial.mode = RunMode::Standard;
                } else if (mode_flag == "adversarial") {
                    cfg.adversarial.mode = RunMode::Adversarial;
                } else {
                    throw ConfigError("train: unknown mode '" + mode_flag + "'");
                }
            }
            if (epochs_flag) cfg.train.epochs = *epochs_flag;
            if (val_size_flag) cfg.data.validation_size = *val_size_flag;
            if (!out_dir.empty()) cfg.output.dir = out_dir;
            if (!data_dir.empty()) cfg.data.dir = data_dir;
            cfg.validate();

            const TrainArtifacts artifacts = run_training(cfg, quiet);
            std::cout << "checkpoint: " << artifacts.checkpoint.string() << "\n";
            if (!artifacts.outcome.test_err.empty()) {
                char buf[64];
                std::snprintf(buf, sizeof(buf), "%.4f",
                              artifacts.outcome.test_err.back());
                std::cout << "final test_err: " << buf << "\n";
            }
            return 0;
        }

        if (eval_cmd->parsed()) {
            const LoadedCheckpoint ckpt = load_checkpoint(eval_ckpt);
            const Dataset ds = load_for_model(ckpt, eval_ckpt, eval_data, transform_path);
            const EvalReport report = error_rate(ckpt.net, ds);
            std::cout << summary(report) << to_record(report) << "\n";
            if (!eval_out.empty()) write_text(eval_out, to_record(report) + "\n");
            return 0;
        }

        if (attack_cmd->parsed()) {
            const LoadedCheckpoint source = load_checkpoint(src_ckpt);
            const LoadedCheckpoint target = load_checkpoint(tgt_ckpt);
            if (source.net.input_dim() != target.net.input_dim() ||
                source.net.output_dim() != target.net.output_dim()) {
                throw ShapeError("attack: source and target models are dimensionally "
                                 "incompatible");
            }
            if (source.meta.preprocess != target.meta.preprocess) {
                throw DataError("attack: the two models expect different preprocessing");
            }
            const Dataset ds =
                load_for_model(source, src_ckpt, attack_data, attack_transform);
            const RobustnessReport report =
                robustness_eval(source.net, target.net, ds, attack_eps);
            std::cout << summary(report) << to_record(report) << "\n";
            if (!attack_out.empty()) write_text(attack_out, to_record(report) + "\n");
            return 0;
        }

        if (inspect_cmd->parsed()) {
            const LoadedCheckpoint ckpt = load_checkpoint(ins_ckpt);
            if (filters_out.empty() && !want_sparsity) {
                throw ConfigError("inspect: pass --filters PATH and/or --sparsity");
            }
            if (!filters_out.empty()) {
                export_filters(ckpt.net, layer_index, filters_out);
                std::cout << "filters: " << filters_out << "\n";
            }
            if (want_sparsity) {
                const Dataset ds =
                    load_for_model(ckpt, ins_ckpt, ins_data, ins_transform);
                const SparsityReport report = sparsity_report(ckpt.net, ds);
                std::cout << summary(report) << to_record(report) << "\n";
            }
            return 0;
        }

        if (repro_cmd->parsed()) {
            ExperimentConfig base_cfg = preset(repro_preset);
            if (repro_epochs) base_cfg.train.epochs = *repro_epochs;
            if (!repro_data_dir.empty()) base_cfg.data.dir = repro_data_dir;
            fs::create_directories(repro_out);

            std::vector<std::vector<double>> per_run_test_errors;
            for (std::size_t i = 0; i < runs; ++i) {
                ExperimentConfig cfg = base_cfg;
                cfg.train.seed = base_seed + i;
                cfg.output.dir = (fs::path(repro_out) / ("run-" + std::to_string(i))).string();
                std::cout << "run " << i + 1 << "/" << runs << " (seed " << cfg.train.seed
                          << ")\n";
                const TrainArtifacts artifacts = run_training(cfg, true);
                per_run_test_errors.push_back(artifacts.outcome.test_err);
            }
            const RunAggregate agg = aggregate_runs(per_run_test_errors, 10, runs);
            const std::string line = format_aggregate_line(
                arch_label(base_cfg.network.arch), units_label(base_cfg.network.activation),
                agg);
            std::cout << line << "\n" << to_record(agg) << "\n";
            write_text(fs::path(repro_out) / "aggregate.txt",
                       line + "\n" + to_record(agg) + "\n");
            return 0;
        }
    } catch (const ConfigError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const DataError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const FormatError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    }
    return 0;
}
