#include "advprop/preprocess.hpp"

#include <cmath>
#include <cstring>
#include <fstream>

#include "advprop/errors.hpp"

namespace advprop {

namespace {

constexpr char kSidecarMagic[4] = {'A', 'B', 'P', 'T'};
constexpr std::uint32_t kSidecarVersion = 1;
constexpr double kDegenerateStd = 1e-12;

void write_u32_le(std::ostream& out, std::uint32_t v) {
    unsigned char b[4] = {static_cast<unsigned char>(v), static_cast<unsigned char>(v >> 8),
                          static_cast<unsigned char>(v >> 16),
                          static_cast<unsigned char>(v >> 24)};
    out.write(reinterpret_cast<const char*>(b), 4);
}

void write_u64_le(std::ostream& out, std::uint64_t v) {
    unsigned char b[8];
    for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>(v >> (8 * i));
    out.write(reinterpret_cast<const char*>(b), 8);
}

void write_f64_le(std::ostream& out, double v) {
    std::uint64_t bits;
    std::memcpy(&bits, &v, 8);
    write_u64_le(out, bits);
}

std::uint32_t read_u32_le(std::istream& in, const std::filesystem::path& path) {
    unsigned char b[4];
    if (!in.read(reinterpret_cast<char*>(b), 4)) {
        throw FormatError(path.string() + ": truncated sidecar");
    }
    return std::uint32_t(b[0]) | (std::uint32_t(b[1]) << 8) | (std::uint32_t(b[2]) << 16) |
           (std::uint32_t(b[3]) << 24);
}

std::uint64_t read_u64_le(std::istream& in, const std::filesystem::path& path) {
    unsigned char b[8];
    if (!in.read(reinterpret_cast<char*>(b), 8)) {
        throw FormatError(path.string() + ": truncated sidecar");
    }
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= std::uint64_t(b[i]) << (8 * i);
    return v;
}

double read_f64_le(std::istream& in, const std::filesystem::path& path) {
    const std::uint64_t bits = read_u64_le(in, path);
    double v;
    std::memcpy(&v, &bits, 8);
    return v;
}

std::vector<double> feature_means(const Matrix& x) {
    std::vector<double> mean(x.cols(), 0.0);
    for (std::size_t r = 0; r < x.rows(); ++r) {
        const double* row = x.row(r);
        for (std::size_t c = 0; c < x.cols(); ++c) mean[c] += row[c];
    }
    const double inv_n = 1.0 / static_cast<double>(x.rows());
    for (double& m : mean) m *= inv_n;
    return mean;
}

}  // namespace

SimpleNormTransform fit_simple_norm(const Matrix& train_inputs) {
    const MeanStd ms = mean_std(train_inputs);
    if (ms.stddev <= kDegenerateStd) {
        throw DataError("fit_simple_norm: degenerate data (stddev " +
                        std::to_string(ms.stddev) + ")");
    }
    return {ms.mean, ms.stddev};
}

Matrix apply_simple_norm(const SimpleNormTransform& t, const Matrix& x) {
    Matrix out(x.rows(), x.cols());
    const double inv = 1.0 / t.stddev;
    for (std::size_t i = 0; i < x.size(); ++i) {
        out.data()[i] = (x.data()[i] - t.mean) * inv;
    }
    ensure_finite(out, "apply_simple_norm");
    return out;
}

Dataset apply_simple_norm(const SimpleNormTransform& t, Dataset ds) {
    ds.inputs = apply_simple_norm(t, ds.inputs);
    ds.preprocessing.steps.push_back({"normalize_simple", {t.mean, t.stddev}});
    return ds;
}

SimpleNormTransform normalize_simple(Dataset& train, const std::vector<Dataset*>& others) {
    const SimpleNormTransform t = fit_simple_norm(train.inputs);
    train = apply_simple_norm(t, std::move(train));
    for (Dataset* ds : others) {
        if (ds) *ds = apply_simple_norm(t, std::move(*ds));
    }
    return t;
}

PerFeatureNormTransform fit_per_feature_norm(const Matrix& train_inputs) {
    if (train_inputs.rows() < 2) {
        throw DataError("fit_per_feature_norm: need at least 2 samples");
    }
    PerFeatureNormTransform t;
    t.mean = feature_means(train_inputs);
    t.stddev.assign(train_inputs.cols(), 0.0);
    for (std::size_t r = 0; r < train_inputs.rows(); ++r) {
        const double* row = train_inputs.row(r);
        for (std::size_t c = 0; c < train_inputs.cols(); ++c) {
            const double d = row[c] - t.mean[c];
            t.stddev[c] += d * d;
        }
    }
    const double inv_n = 1.0 / static_cast<double>(train_inputs.rows());
    for (std::size_t c = 0; c < t.stddev.size(); ++c) {
        t.stddev[c] = std::sqrt(t.stddev[c] * inv_n);
        if (t.stddev[c] <= kDegenerateStd) {
            throw DataError("fit_per_feature_norm: degenerate feature " + std::to_string(c));
        }
    }
    return t;
}

Matrix apply_per_feature_norm(const PerFeatureNormTransform& t, const Matrix& x) {
    if (x.cols() != t.mean.size()) {
        throw ShapeError("apply_per_feature_norm: " + std::to_string(x.cols()) +
                         " features vs fitted " + std::to_string(t.mean.size()));
    }
    Matrix out(x.rows(), x.cols());
    for (std::size_t r = 0; r < x.rows(); ++r) {
        const double* src = x.row(r);
        double* dst = out.row(r);
        for (std::size_t c = 0; c < x.cols(); ++c) {
            dst[c] = (src[c] - t.mean[c]) / t.stddev[c];
        }
    }
    ensure_finite(out, "apply_per_feature_norm");
    return out;
}

Dataset apply_per_feature_norm(const PerFeatureNormTransform& t, Dataset ds) {
    ds.inputs = apply_per_feature_norm(t, ds.inputs);
    ds.preprocessing.steps.push_back({"normalize_per_feature", {}});
    return ds;
}

SymmetricEigen jacobi_eigen_symmetric(Matrix a, std::size_t max_sweeps) {
    if (a.rows() != a.cols()) {
        throw ShapeError("jacobi_eigen_symmetric: matrix is " + a.shape_str());
    }
    ensure_finite(a, "jacobi_eigen_symmetric");
    const std::size_t n = a.rows();
    Matrix v = identity(n);

    auto off_diag_sq = [&]() {
        double s = 0.0;
        for (std::size_t p = 0; p < n; ++p)
            for (std::size_t q = p + 1; q < n; ++q) s += a(p, q) * a(p, q);
        return s;
    };
    double total_sq = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) total_sq += a.data()[i] * a.data()[i];
    const double stop = 1e-26 * std::max(total_sq, 1e-300);

    for (std::size_t sweep = 0; sweep < max_sweeps; ++sweep) {
        if (off_diag_sq() <= stop) break;
        for (std::size_t p = 0; p < n; ++p) {
            for (std::size_t q = p + 1; q < n; ++q) {
                const double apq = a(p, q);
                if (apq == 0.0) continue;
                const double theta = (a(q, q) - a(p, p)) / (2.0 * apq);
                const double t = (theta >= 0.0 ? 1.0 : -1.0) /
                                 (std::abs(theta) + std::sqrt(theta * theta + 1.0));
                const double c = 1.0 / std::sqrt(t * t + 1.0);
                const double s = t * c;
                for (std::size_t k = 0; k < n; ++k) {
                    const double akp = a(k, p), akq = a(k, q);
                    a(k, p) = c * akp - s * akq;
                    a(k, q) = s * akp + c * akq;
                }
                for (std::size_t k = 0; k < n; ++k) {
                    const double apk = a(p, k), aqk = a(q, k);
                    a(p, k) = c * apk - s * aqk;
                    a(q, k) = s * apk + c * aqk;
                }
                for (std::size_t k = 0; k < n; ++k) {
                    const double vkp = v(k, p), vkq = v(k, q);
                    v(k, p) = c * vkp - s * vkq;
                    v(k, q) = s * vkp + c * vkq;
                }
            }
        }
    }

    // Sort ascending by eigenvalue for a deterministic layout.
    std::vector<std::size_t> idx(n);
    for (std::size_t i = 0; i < n; ++i) idx[i] = i;
    std::sort(idx.begin(), idx.end(),
              [&](std::size_t l, std::size_t r) { return a(l, l) < a(r, r); });

    SymmetricEigen result;
    result.eigenvalues.resize(n);
    result.eigenvectors = Matrix(n, n);
    for (std::size_t j = 0; j < n; ++j) {
        result.eigenvalues[j] = a(idx[j], idx[j]);
        for (std::size_t i = 0; i < n; ++i) result.eigenvectors(i, j) = v(i, idx[j]);
    }
    return result;
}

ZcaTransform zca_fit(const Matrix& train_inputs, double regularizer) {
    if (train_inputs.rows() < 2) throw ConfigError("zca_fit: need at least 2 samples");
    if (!(regularizer > 0.0)) throw ConfigError("zca_fit: regularizer must be positive");

    const std::size_t n = train_inputs.rows(), d = train_inputs.cols();
    ZcaTransform t;
    t.regularizer = regularizer;
    t.mean = feature_means(train_inputs);

    Matrix centered(n, d);
    for (std::size_t r = 0; r < n; ++r) {
        const double* src = train_inputs.row(r);
        double* dst = centered.row(r);
        for (std::size_t c = 0; c < d; ++c) dst[c] = src[c] - t.mean[c];
    }
    Matrix cov = scale(matmul_tn(centered, centered), 1.0 / static_cast<double>(n));

    const SymmetricEigen eig = jacobi_eigen_symmetric(cov);

    // B = U diag(1/sqrt(l + r)), then W = B U^T. Slightly negative
    // eigenvalues from rounding are clamped at zero.
    Matrix b = eig.eigenvectors;
    for (std::size_t j = 0; j < d; ++j) {
        const double lambda = std::max(eig.eigenvalues[j], 0.0);
        const double f = 1.0 / std::sqrt(lambda + regularizer);
        if (!std::isfinite(f)) throw NumericError("zca_fit: non-finite scaling factor");
        for (std::size_t i = 0; i < d; ++i) b(i, j) *= f;
    }
    t.whitening = matmul_nt(b, eig.eigenvectors);
    ensure_finite(t.whitening, "zca_fit");
    return t;
}

Matrix zca_apply(const ZcaTransform& t, const Matrix& x) {
    if (x.cols() != t.mean.size()) {
        throw ShapeError("zca_apply: " + std::to_string(x.cols()) + " features vs fitted " +
                         std::to_string(t.mean.size()));
    }
    Matrix centered(x.rows(), x.cols());
    for (std::size_t r = 0; r < x.rows(); ++r) {
        const double* src = x.row(r);
        double* dst = centered.row(r);
        for (std::size_t c = 0; c < x.cols(); ++c) dst[c] = src[c] - t.mean[c];
    }
    return matmul_nt(centered, t.whitening);
}

Dataset zca_apply(const ZcaTransform& t, Dataset ds) {
    ds.inputs = zca_apply(t, ds.inputs);
    ds.preprocessing.steps.push_back({"zca", {t.regularizer}});
    return ds;
}

Dataset apply_pipeline(const FittedTransforms& pipeline, Dataset ds) {
    for (const TransformVariant& step : pipeline.steps) {
        if (std::holds_alternative<Scale01Transform>(step)) {
            ds = scale_01(std::move(ds));
        } else if (const auto* simple = std::get_if<SimpleNormTransform>(&step)) {
            ds = apply_simple_norm(*simple, std::move(ds));
        } else if (const auto* perf = std::get_if<PerFeatureNormTransform>(&step)) {
            ds = apply_per_feature_norm(*perf, std::move(ds));
        } else if (const auto* zca = std::get_if<ZcaTransform>(&step)) {
            ds = zca_apply(*zca, std::move(ds));
        }
    }
    return ds;
}

// Sidecar layout (all integers and reals little-endian):
//   "ABPT" | u32 version | u64 config_hash | u32 step_count | steps...
//   step: u8 kind
//     kind 0 scale01:     no payload
//     kind 1 simple:      f64 mean, f64 stddev
//     kind 2 per-feature: u32 d, f64 mean[d], f64 stddev[d]
//     kind 3 zca:         u32 d, f64 regularizer, f64 mean[d],
//                         f64 whitening[d*d] row-major
void save_transform_sidecar(const std::filesystem::path& path, std::uint64_t config_hash,
                            const FittedTransforms& pipeline) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw FormatError("cannot open " + path.string() + " for writing");
    out.write(kSidecarMagic, 4);
    write_u32_le(out, kSidecarVersion);
    write_u64_le(out, config_hash);
    write_u32_le(out, static_cast<std::uint32_t>(pipeline.steps.size()));
    for (const TransformVariant& step : pipeline.steps) {
        if (std::holds_alternative<Scale01Transform>(step)) {
            out.put(char(0));
        } else if (const auto* simple = std::get_if<SimpleNormTransform>(&step)) {
            out.put(char(1));
            write_f64_le(out, simple->mean);
            write_f64_le(out, simple->stddev);
        } else if (const auto* perf = std::get_if<PerFeatureNormTransform>(&step)) {
            out.put(char(2));
            write_u32_le(out, static_cast<std::uint32_t>(perf->mean.size()));
            for (double v : perf->mean) write_f64_le(out, v);
            for (double v : perf->stddev) write_f64_le(out, v);
        } else if (const auto* zca = std::get_if<ZcaTransform>(&step)) {
            out.put(char(3));
            write_u32_le(out, static_cast<std::uint32_t>(zca->mean.size()));
            write_f64_le(out, zca->regularizer);
            for (double v : zca->mean) write_f64_le(out, v);
            for (std::size_t i = 0; i < zca->whitening.size(); ++i) {
                write_f64_le(out, zca->whitening.data()[i]);
            }
        }
    }
    if (!out) throw FormatError("failed writing sidecar " + path.string());
}

FittedTransforms load_transform_sidecar(const std::filesystem::path& path,
                                        std::uint64_t* config_hash_out) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw FormatError("cannot open sidecar " + path.string());
    char magic[4];
    if (!in.read(magic, 4) || std::memcmp(magic, kSidecarMagic, 4) != 0) {
        throw FormatError(path.string() + ": bad sidecar magic at offset 0 (expected ABPT)");
    }
    const std::uint32_t version = read_u32_le(in, path);
    if (version != kSidecarVersion) {
        throw FormatError(path.string() + ": unsupported sidecar version " +
                          std::to_string(version));
    }
    const std::uint64_t hash = read_u64_le(in, path);
    if (config_hash_out) *config_hash_out = hash;

    FittedTransforms pipeline;
    const std::uint32_t count = read_u32_le(in, path);
    for (std::uint32_t s = 0; s < count; ++s) {
        const int kind = in.get();
        if (kind == EOF) throw FormatError(path.string() + ": truncated sidecar");
        switch (kind) {
            case 0:
                pipeline.steps.emplace_back(Scale01Transform{});
                break;
            case 1: {
                SimpleNormTransform t;
                t.mean = read_f64_le(in, path);
                t.stddev = read_f64_le(in, path);
                pipeline.steps.emplace_back(t);
                break;
            }
            case 2: {
                PerFeatureNormTransform t;
                const std::uint32_t d = read_u32_le(in, path);
                t.mean.resize(d);
                t.stddev.resize(d);
                for (auto& v : t.mean) v = read_f64_le(in, path);
                for (auto& v : t.stddev) v = read_f64_le(in, path);
                pipeline.steps.emplace_back(std::move(t));
                break;
            }
            case 3: {
                ZcaTransform t;
                const std::uint32_t d = read_u32_le(in, path);
                t.regularizer = read_f64_le(in, path);
                t.mean.resize(d);
                for (auto& v : t.mean) v = read_f64_le(in, path);
                std::vector<double> w(std::size_t(d) * d);
                for (auto& v : w) v = read_f64_le(in, path);
                t.whitening = Matrix(d, d, std::move(w));
                pipeline.steps.emplace_back(std::move(t));
                break;
            }
            default:
                throw FormatError(path.string() + ": unknown transform kind " +
                                  std::to_string(kind));
        }
    }
    return pipeline;
}

}  // namespace advprop
