#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "advprop/dataset.hpp"
#include "advprop/network.hpp"

namespace advprop {

/// Argmax predictions for every row, ties broken toward the lowest class
/// index. Evaluates in fixed-size chunks; results are independent of the
/// chunking.
std::vector<int> predict(const Network& net, const Matrix& inputs);

struct EvalReport {
    std::string dataset;
    std::size_t n_samples = 0;
    double error_rate = 0.0;  // misclassified / n_samples, exact
    std::size_t num_classes = 0;
    std::vector<std::size_t> confusion;  // row-major, confusion[true * c + predicted]
    std::string timestamp;
    std::string model_id;
};

EvalReport error_rate(const Network& net, const Dataset& ds);

/// FGSM-perturbed copy of `ds` built from the source model's input
/// gradients at the true labels. Labels are unchanged; the provenance
/// (source id, epsilon) is recorded in the dataset name.
Dataset build_adversarial_testset(const Network& source, const Dataset& ds, double epsilon);

struct RobustnessReport {
    std::string source_model;
    std::string target_model;
    double epsilon = 0.0;
    double clean_error = 0.0;
    double adversarial_error = 0.0;
    /// Error restricted to samples the target classified correctly on the
    /// clean inputs (0 when there are none).
    double adv_error_on_clean_correct = 0.0;
    std::size_t n_samples = 0;
};

RobustnessReport robustness_eval(const Network& source, const Network& target,
                                 const Dataset& ds, double epsilon);

struct SparsityReport {
    /// One entry per hidden layer; nullopt for non-ReLU layers.
    std::vector<std::optional<double>> per_layer;
    /// Zero fraction across all ReLU hidden units; nullopt when the net
    /// has no ReLU hidden layer.
    std::optional<double> overall;
    std::size_t n_samples = 0;
};

/// Fraction of hidden activations exactly equal to 0.0 over the dataset.
/// Counts true floating-point zeros; no threshold is involved.
SparsityReport sparsity_report(const Network& net, const Dataset& ds);

/// Tiles the incoming weights of every unit in the given layer into a grid
/// image: binary PGM for 28x28 inputs, binary PPM for 32x32x3. Each row is
/// min-max normalized to [0, 255] independently; constant rows render as
/// mid-gray 127.
void export_filters(const Network& net, std::size_t layer_index,
                    const std::filesystem::path& path);

struct RunAggregate {
    std::vector<double> per_run_means;
    double mean = 0.0;
    double stddev = 0.0;  // sample standard deviation across runs
    std::size_t last_k = 0;
    std::size_t runs = 0;
};

/// Per-run mean of the last `last_k` epoch errors, then the cross-run mean
/// and sample standard deviation.
RunAggregate aggregate_runs(const std::vector<std::vector<double>>& per_epoch_errors,
                            std::size_t last_k, std::size_t runs);

/// "2x400  ReLU  0.83±0.04%" (errors are fractions; printed as percent).
std::string format_aggregate_line(const std::string& arch, const std::string& units,
                                  const RunAggregate& agg);

// Line-delimited key=value records plus human-readable summaries.
std::string to_record(const EvalReport& r);
std::string to_record(const RobustnessReport& r);
std::string to_record(const SparsityReport& r);
std::string to_record(const RunAggregate& r);
std::string summary(const EvalReport& r);
std::string summary(const RobustnessReport& r);
std::string summary(const SparsityReport& r);

}  // namespace advprop
