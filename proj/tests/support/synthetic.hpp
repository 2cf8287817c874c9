#pragma once

// Deterministic synthetic datasets and dataset-file writers for the test
// suites. The digit generator composes per-class stroke prototypes with
// small shifts, intensity jitter and pixel noise, producing 28x28 byte
// images that a small fully-connected net can learn in a few epochs while
// still leaving room for transferable gradient-sign attacks.

#include <cstdint>
#include <filesystem>
#include <functional>
#include <string>

#include "advprop/dataset.hpp"

namespace advprop::testing {

/// Raw byte-valued digits dataset (entries in [0, 255], balanced labels).
Dataset synthetic_digits(std::size_t n, std::uint64_t seed,
                         std::string name = "synthetic-digits");

/// IDX pair writer (big-endian headers, same layout the loader expects).
void write_idx_pair(const std::filesystem::path& images_path,
                    const std::filesystem::path& labels_path,
                    const std::vector<std::uint8_t>& pixels,
                    const std::vector<std::uint8_t>& labels, std::size_t rows,
                    std::size_t cols);

/// Writes a dataset of raw byte values as an IDX pair.
void write_dataset_as_idx(const std::filesystem::path& images_path,
                          const std::filesystem::path& labels_path, const Dataset& raw,
                          std::size_t rows, std::size_t cols);

/// Standard MNIST file names under `dir`, filled from a cheap byte pattern
/// (content is arbitrary; counts and layout are what matter).
void write_pattern_mnist_dir(const std::filesystem::path& dir, std::size_t n_train,
                             std::size_t n_test);

/// Standard MNIST file names under `dir`, filled with synthetic digits.
void write_digits_mnist_dir(const std::filesystem::path& dir, std::size_t n_train,
                            std::size_t n_test, std::uint64_t seed);

/// One CIFAR-10 binary batch file with `n` records from a byte pattern.
void write_pattern_cifar_file(const std::filesystem::path& path, std::size_t n,
                              std::uint32_t pattern_seed);

/// Full CIFAR-10 binary layout (five train batches plus test batch).
void write_pattern_cifar_dir(const std::filesystem::path& dir, std::size_t n_per_train_file,
                             std::size_t n_test);

/// Unique scratch directory, removed on destruction.
class TempDir {
public:
    TempDir();
    ~TempDir();
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;

    const std::filesystem::path& path() const { return path_; }

private:
    std::filesystem::path path_;
};

}  // namespace advprop::testing
