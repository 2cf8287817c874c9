#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "advprop/matrix.hpp"

namespace advprop {

/// One preprocessing step that has been applied to a dataset, with its
/// fitted scalar parameters when they are small enough to keep inline.
struct TransformStep {
    std::string name;
    std::vector<double> params;
};

struct PreprocessingRecord {
    std::vector<TransformStep> steps;

    bool raw() const { return steps.empty(); }
};

struct Dataset {
    Matrix inputs;            // n_samples x dim
    std::vector<int> labels;  // class ids in [0, num_classes)
    Matrix targets;           // one-hot, n_samples x num_classes
    std::string name;
    PreprocessingRecord preprocessing;

    std::size_t size() const { return inputs.rows(); }
    std::size_t dim() const { return inputs.cols(); }
    std::size_t num_classes() const { return targets.cols(); }
};

/// Builds the one-hot target matrix and validates label ranges.
Dataset make_dataset(Matrix inputs, std::vector<int> labels, std::size_t num_classes,
                     std::string name);

/// IDX pair loader (big-endian headers; images magic 0x00000803 with dims
/// [n, rows, cols], labels magic 0x00000801 with dims [n]). Pixels map to
/// reals in [0, 255]; images are flattened row-major.
Dataset load_idx(const std::filesystem::path& images_path,
                 const std::filesystem::path& labels_path, std::string name = "");

/// Convenience wrapper using the standard file names under `root`
/// (train-images-idx3-ubyte / train-labels-idx1-ubyte and the t10k pair).
Dataset load_mnist(const std::filesystem::path& root, bool train_split);

/// One binary batch file of 3073-byte records (1 label byte + 3072 pixel
/// bytes, channel-major planes). Accepts any whole number of records.
void load_cifar_batch_file(const std::filesystem::path& path,
                           std::vector<double>& inputs_out, std::vector<int>& labels_out);

/// Full CIFAR-10 layout: data_batch_1..5.bin plus test_batch.bin in `dir`.
std::pair<Dataset, Dataset> load_cifar10(const std::filesystem::path& dir);

/// Divides raw byte-valued inputs by 255. Rejects datasets that are not
/// raw (already-transformed inputs) or contain values outside [0, 255].
Dataset scale_01(Dataset ds);

/// Deterministic split: the last n_val samples in file order become the
/// validation set.
std::pair<Dataset, Dataset> split_validation(const Dataset& ds, std::size_t n_val);

struct BatchPlan {
    std::uint64_t seed = 0;
    std::size_t epoch = 0;
    std::size_t batch_size = 0;
    std::vector<std::size_t> order;  // permutation of [0, n)

    std::size_t num_batches() const {
        return order.empty() ? 0 : (order.size() + batch_size - 1) / batch_size;
    }
};

/// Fisher-Yates permutation driven by epoch_seed(seed, epoch). The final
/// short batch is kept.
BatchPlan make_batch_plan(std::size_t n, std::size_t batch_size, std::uint64_t seed,
                          std::size_t epoch);

struct Batch {
    Matrix x;
    Matrix t;
    std::vector<int> labels;
};

/// Materializes one batch of the plan.
Batch gather_batch(const Dataset& ds, const BatchPlan& plan, std::size_t batch_index);

/// Lazy view over the shuffled batches of one epoch.
class EpochBatches {
public:
    EpochBatches(const Dataset& ds, BatchPlan plan) : ds_(&ds), plan_(std::move(plan)) {}

    std::size_t size() const { return plan_.num_batches(); }
    Batch at(std::size_t i) const { return gather_batch(*ds_, plan_, i); }
    const BatchPlan& plan() const { return plan_; }

private:
    const Dataset* ds_;
    BatchPlan plan_;
};

EpochBatches epoch_batches(const Dataset& ds, std::size_t batch_size, std::uint64_t seed,
                           std::size_t epoch);

}  // namespace advprop
