#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "advprop/checkpoint.hpp"
#include "advprop/network.hpp"
#include "advprop/optimizer.hpp"

namespace advprop {

enum class RunMode { Standard, Adversarial };
enum class DatasetKind { Mnist, Cifar10 };
enum class PreprocessKind { None, Scale01, Simple, Zca, PerFeature };

const char* to_string(RunMode m);
const char* to_string(DatasetKind d);
const char* to_string(PreprocessKind p);

struct NetworkSection {
    std::vector<std::size_t> arch;  // input, hidden..., output
    Activation activation = Activation::Relu;
    Loss loss = Loss::CrossEntropyLogistic;
};

struct AdversarialSection {
    double epsilon = 0.0;
    RunMode mode = RunMode::Adversarial;
};

struct DropoutSection {
    bool enabled = false;
    double input_rate = 0.0;
    double hidden_rate = 0.0;
};

struct DataSection {
    DatasetKind dataset = DatasetKind::Mnist;
    PreprocessKind preprocessing = PreprocessKind::Scale01;
    std::size_t validation_size = 0;
    double zca_regularizer = 1e-5;
    std::string dir;  // dataset root; falls back to $ADVPROP_DATA_DIR
};

struct OutputSection {
    std::string dir = "run-out";
    std::size_t checkpoint_every = 0;  // 0: final checkpoint only
};

/// Flat INI config: sections [network] [train] [adversarial] [dropout]
/// [data] [output], key=value pairs, '#' or ';' comments. Unknown sections
/// or keys are rejected. The manifest a run emits is itself a valid config
/// with every field explicit, so a run can be replayed from it.
struct ExperimentConfig {
    NetworkSection network;
    TrainConfig train;
    AdversarialSection adversarial;
    DropoutSection dropout;
    DataSection data;
    OutputSection output;

    void validate() const;
    PreprocessCode preprocess_code() const;
};

ExperimentConfig parse_config_text(const std::string& text, const std::string& origin);
ExperimentConfig parse_config_file(const std::filesystem::path& path);

/// Full INI serialization with every field explicit plus comment lines
/// recording the fixed protocol choices.
std::string manifest_text(const ExperimentConfig& cfg);
void write_manifest(const std::filesystem::path& path, const ExperimentConfig& cfg);

/// FNV-1a over the canonical serialization, excluding output.dir,
/// output.checkpoint_every and data.dir so relocating a run does not
/// change its identity.
std::uint64_t config_hash(const ExperimentConfig& cfg);

/// Named experiment presets (see preset_names()).
ExperimentConfig preset(const std::string& name);
std::vector<std::string> preset_names();

}  // namespace advprop
