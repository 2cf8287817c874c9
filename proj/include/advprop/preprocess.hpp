#pragma once

#include <cstdint>
#include <filesystem>
#include <variant>
#include <vector>

#include "advprop/dataset.hpp"
#include "advprop/matrix.hpp"

namespace advprop {

struct Scale01Transform {};

/// One scalar mean/std over every entry of the training inputs.
struct SimpleNormTransform {
    double mean = 0.0;
    double stddev = 1.0;
};

/// Per-feature variant, kept behind a config switch for sensitivity checks.
struct PerFeatureNormTransform {
    std::vector<double> mean;
    std::vector<double> stddev;
};

/// mean-center, then multiply by U (L + r I)^(-1/2) U^T where C = U L U^T
/// is the eigendecomposition of the feature covariance (divisor n).
struct ZcaTransform {
    std::vector<double> mean;
    Matrix whitening;  // symmetric d x d
    double regularizer = 0.0;
};

SimpleNormTransform fit_simple_norm(const Matrix& train_inputs);
Matrix apply_simple_norm(const SimpleNormTransform& t, const Matrix& x);
Dataset apply_simple_norm(const SimpleNormTransform& t, Dataset ds);

/// Fits on the first dataset and transforms it along with every dataset in
/// `others` using the train-fitted statistics.
SimpleNormTransform normalize_simple(Dataset& train, const std::vector<Dataset*>& others = {});

PerFeatureNormTransform fit_per_feature_norm(const Matrix& train_inputs);
Matrix apply_per_feature_norm(const PerFeatureNormTransform& t, const Matrix& x);
Dataset apply_per_feature_norm(const PerFeatureNormTransform& t, Dataset ds);

ZcaTransform zca_fit(const Matrix& train_inputs, double regularizer);
Matrix zca_apply(const ZcaTransform& t, const Matrix& x);
Dataset zca_apply(const ZcaTransform& t, Dataset ds);

struct SymmetricEigen {
    std::vector<double> eigenvalues;  // ascending
    Matrix eigenvectors;              // columns match eigenvalue order
};

/// Cyclic Jacobi rotations; intended for the symmetric covariance matrices
/// ZCA needs. Deterministic and accurate, with no external dependencies.
SymmetricEigen jacobi_eigen_symmetric(Matrix a, std::size_t max_sweeps = 64);

using TransformVariant =
    std::variant<Scale01Transform, SimpleNormTransform, PerFeatureNormTransform, ZcaTransform>;

/// Ordered preprocessing pipeline fitted on the training split.
struct FittedTransforms {
    std::vector<TransformVariant> steps;
};

Dataset apply_pipeline(const FittedTransforms& pipeline, Dataset ds);

// Sidecar file, magic "ABPT": version, the config hash of the producing
// run, then each transform as a kind byte plus little-endian 64-bit real
// parameters. Documented in detail next to the writer.
void save_transform_sidecar(const std::filesystem::path& path, std::uint64_t config_hash,
                            const FittedTransforms& pipeline);
FittedTransforms load_transform_sidecar(const std::filesystem::path& path,
                                        std::uint64_t* config_hash_out = nullptr);

}  // namespace advprop
