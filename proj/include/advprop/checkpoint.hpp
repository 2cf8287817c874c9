#pragma once

#include <cstdint>
#include <filesystem>
#include <string>

#include "advprop/network.hpp"

namespace advprop {

/// Preprocessing the model expects at evaluation time. Codes >= 2 need the
/// fitted-transform sidecar produced by the training run.
enum class PreprocessCode : std::uint8_t {
    Raw = 0,
    Scale01 = 1,
    Scale01Simple = 2,
    Scale01Zca = 3,
    Scale01PerFeature = 4,
};

struct CheckpointMeta {
    std::uint64_t epoch = 0;
    std::uint64_t seed = 0;
    std::uint64_t config_hash = 0;
    PreprocessCode preprocess = PreprocessCode::Raw;
};

// Checkpoint layout (little-endian):
//   "ABPC" | u32 version | u32 layer_count | u32 input_dim
//   per layer: u32 out_units | u8 activation code
//   u8 loss code | u64 epoch | u64 seed | u64 config_hash | u8 preprocess
//   per layer: f64 weights row-major (out x in), then f64 biases
// Saving, loading and saving again yields byte-identical files.
void save_checkpoint(const std::filesystem::path& path, const Network& net,
                     const CheckpointMeta& meta);

struct LoadedCheckpoint {
    Network net;
    CheckpointMeta meta;
};

LoadedCheckpoint load_checkpoint(const std::filesystem::path& path);

/// FNV-1a over the serialized parameter payload; stable across runs.
std::uint64_t model_id(const Network& net);
std::string model_id_hex(const Network& net);

bool preprocess_needs_sidecar(PreprocessCode code);

}  // namespace advprop
