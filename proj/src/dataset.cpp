#include "advprop/dataset.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>

#include "advprop/errors.hpp"
#include "advprop/rng.hpp"

namespace advprop {

namespace {

constexpr std::uint32_t kIdxImagesMagic = 0x00000803;
constexpr std::uint32_t kIdxLabelsMagic = 0x00000801;
constexpr std::size_t kCifarPixels = 3072;
constexpr std::size_t kCifarRecord = kCifarPixels + 1;
constexpr std::size_t kNumClasses = 10;

std::string hex32(std::uint32_t v) {
    char buf[16];
    std::snprintf(buf, sizeof(buf), "0x%08x", v);
    return buf;
}

std::uint32_t read_u32_be(std::ifstream& in, const std::filesystem::path& path,
                          const char* what) {
    unsigned char b[4];
    if (!in.read(reinterpret_cast<char*>(b), 4)) {
        throw FormatError(path.string() + ": truncated while reading " + what);
    }
    return (std::uint32_t(b[0]) << 24) | (std::uint32_t(b[1]) << 16) |
           (std::uint32_t(b[2]) << 8) | std::uint32_t(b[3]);
}

std::vector<unsigned char> read_exact(std::ifstream& in, std::size_t n,
                                      const std::filesystem::path& path, const char* what) {
    std::vector<unsigned char> bytes(n);
    if (!in.read(reinterpret_cast<char*>(bytes.data()), static_cast<std::streamsize>(n))) {
        throw FormatError(path.string() + ": truncated " + what + " (expected " +
                          std::to_string(n) + " bytes)");
    }
    return bytes;
}

void require_exists(const std::filesystem::path& path) {
    if (!std::filesystem::exists(path)) {
        throw FormatError("missing file: " + path.string());
    }
}

}  // namespace

Dataset make_dataset(Matrix inputs, std::vector<int> labels, std::size_t num_classes,
                     std::string name) {
    if (inputs.rows() != labels.size()) {
        throw DataError("make_dataset: " + std::to_string(inputs.rows()) + " inputs vs " +
                        std::to_string(labels.size()) + " labels");
    }
    Matrix targets(inputs.rows(), num_classes);
    for (std::size_t i = 0; i < labels.size(); ++i) {
        const int label = labels[i];
        if (label < 0 || static_cast<std::size_t>(label) >= num_classes) {
            throw DataError("make_dataset: label " + std::to_string(label) + " at row " +
                            std::to_string(i) + " outside [0, " +
                            std::to_string(num_classes) + ")");
        }
        targets(i, static_cast<std::size_t>(label)) = 1.0;
    }
    Dataset ds;
    ds.inputs = std::move(inputs);
    ds.labels = std::move(labels);
    ds.targets = std::move(targets);
    ds.name = std::move(name);
    return ds;
}

Dataset load_idx(const std::filesystem::path& images_path,
                 const std::filesystem::path& labels_path, std::string name) {
    require_exists(images_path);
    require_exists(labels_path);

    std::ifstream img(images_path, std::ios::binary);
    const std::uint32_t img_magic = read_u32_be(img, images_path, "magic");
    if (img_magic != kIdxImagesMagic) {
        throw FormatError(images_path.string() + ": bad magic " + hex32(img_magic) +
                          " at offset 0 (expected " + hex32(kIdxImagesMagic) + ")");
    }
    const std::uint32_t n_images = read_u32_be(img, images_path, "image count");
    const std::uint32_t n_rows = read_u32_be(img, images_path, "row count");
    const std::uint32_t n_cols = read_u32_be(img, images_path, "column count");
    const std::size_t dim = std::size_t(n_rows) * n_cols;
    if (dim == 0) throw FormatError(images_path.string() + ": zero image dimensions");
    const auto pixels =
        read_exact(img, std::size_t(n_images) * dim, images_path, "pixel data");

    std::ifstream lab(labels_path, std::ios::binary);
    const std::uint32_t lab_magic = read_u32_be(lab, labels_path, "magic");
    if (lab_magic != kIdxLabelsMagic) {
        throw FormatError(labels_path.string() + ": bad magic " + hex32(lab_magic) +
                          " at offset 0 (expected " + hex32(kIdxLabelsMagic) + ")");
    }
    const std::uint32_t n_labels = read_u32_be(lab, labels_path, "label count");
    if (n_labels != n_images) {
        throw DataError("IDX pair mismatch: " + std::to_string(n_images) + " images in " +
                        images_path.string() + " vs " + std::to_string(n_labels) +
                        " labels in " + labels_path.string());
    }
    const auto label_bytes = read_exact(lab, n_labels, labels_path, "label data");

    Matrix inputs(n_images, dim);
    double* p = inputs.data();
    for (std::size_t i = 0; i < pixels.size(); ++i) p[i] = double(pixels[i]);

    std::vector<int> labels(n_labels);
    for (std::size_t i = 0; i < label_bytes.size(); ++i) {
        if (label_bytes[i] > 9) {
            throw DataError(labels_path.string() + ": label byte " +
                            std::to_string(int(label_bytes[i])) + " at record " +
                            std::to_string(i) + " exceeds 9");
        }
        labels[i] = int(label_bytes[i]);
    }

    if (name.empty()) name = images_path.stem().string();
    return make_dataset(std::move(inputs), std::move(labels), kNumClasses, std::move(name));
}

Dataset load_mnist(const std::filesystem::path& root, bool train_split) {
    if (train_split) {
        return load_idx(root / "train-images-idx3-ubyte", root / "train-labels-idx1-ubyte",
                        "mnist-train");
    }
    return load_idx(root / "t10k-images-idx3-ubyte", root / "t10k-labels-idx1-ubyte",
                    "mnist-test");
}

void load_cifar_batch_file(const std::filesystem::path& path,
                           std::vector<double>& inputs_out, std::vector<int>& labels_out) {
    require_exists(path);
    const std::uintmax_t file_size = std::filesystem::file_size(path);
    if (file_size == 0 || file_size % kCifarRecord != 0) {
        throw FormatError(path.string() + ": size " + std::to_string(file_size) +
                          " is not a whole number of " + std::to_string(kCifarRecord) +
                          "-byte records");
    }
    const std::size_t n_records = static_cast<std::size_t>(file_size / kCifarRecord);

    std::ifstream in(path, std::ios::binary);
    std::vector<unsigned char> record(kCifarRecord);
    for (std::size_t r = 0; r < n_records; ++r) {
        if (!in.read(reinterpret_cast<char*>(record.data()),
                     static_cast<std::streamsize>(kCifarRecord))) {
            throw FormatError(path.string() + ": truncated at record " + std::to_string(r));
        }
        if (record[0] > 9) {
            throw DataError(path.string() + ": label byte " + std::to_string(int(record[0])) +
                            " at record " + std::to_string(r) + " exceeds 9");
        }
        labels_out.push_back(int(record[0]));
        for (std::size_t i = 1; i < kCifarRecord; ++i) {
            inputs_out.push_back(double(record[i]));
        }
    }
}

std::pair<Dataset, Dataset> load_cifar10(const std::filesystem::path& dir) {
    std::vector<double> train_pixels;
    std::vector<int> train_labels;
    for (int b = 1; b <= 5; ++b) {
        load_cifar_batch_file(dir / ("data_batch_" + std::to_string(b) + ".bin"),
                              train_pixels, train_labels);
    }
    Matrix train_inputs(train_labels.size(), kCifarPixels, std::move(train_pixels));
    Dataset train = make_dataset(std::move(train_inputs), std::move(train_labels),
                                 kNumClasses, "cifar10-train");

    std::vector<double> test_pixels;
    std::vector<int> test_labels;
    load_cifar_batch_file(dir / "test_batch.bin", test_pixels, test_labels);
    Matrix test_inputs(test_labels.size(), kCifarPixels, std::move(test_pixels));
    Dataset test = make_dataset(std::move(test_inputs), std::move(test_labels), kNumClasses,
                                "cifar10-test");
    return {std::move(train), std::move(test)};
}

Dataset scale_01(Dataset ds) {
    if (!ds.preprocessing.raw()) {
        throw DataError("scale_01: inputs of '" + ds.name +
                        "' are not raw bytes (already transformed)");
    }
    double* p = ds.inputs.data();
    for (std::size_t i = 0; i < ds.inputs.size(); ++i) {
        if (!(p[i] >= 0.0 && p[i] <= 255.0)) {
            throw DataError("scale_01: entry " + std::to_string(p[i]) +
                            " outside [0, 255] at index " + std::to_string(i));
        }
        p[i] /= 255.0;
    }
    ds.preprocessing.steps.push_back({"scale01", {}});
    return ds;
}

std::pair<Dataset, Dataset> split_validation(const Dataset& ds, std::size_t n_val) {
    if (n_val >= ds.size() && n_val != 0) {
        throw ConfigError("split_validation: n_val " + std::to_string(n_val) +
                          " must be smaller than the dataset size " +
                          std::to_string(ds.size()));
    }
    const std::size_t n_train = ds.size() - n_val;

    auto take = [&](std::size_t begin, std::size_t count, const std::string& suffix) {
        Matrix inputs(count, ds.dim());
        std::vector<int> labels(count);
        for (std::size_t i = 0; i < count; ++i) {
            const double* src = ds.inputs.row(begin + i);
            std::copy(src, src + ds.dim(), inputs.row(i));
            labels[i] = ds.labels[begin + i];
        }
        Dataset part = make_dataset(std::move(inputs), std::move(labels), ds.num_classes(),
                                    ds.name + suffix);
        part.preprocessing = ds.preprocessing;
        return part;
    };

    return {take(0, n_train, ""), take(n_train, n_val, "-val")};
}

BatchPlan make_batch_plan(std::size_t n, std::size_t batch_size, std::uint64_t seed,
                          std::size_t epoch) {
    if (batch_size < 1) throw ConfigError("make_batch_plan: batch_size must be at least 1");
    BatchPlan plan;
    plan.seed = seed;
    plan.epoch = epoch;
    plan.batch_size = batch_size;
    plan.order.resize(n);
    for (std::size_t i = 0; i < n; ++i) plan.order[i] = i;
    Rng rng(epoch_seed(seed, epoch));
    rng.shuffle(plan.order);
    return plan;
}

Batch gather_batch(const Dataset& ds, const BatchPlan& plan, std::size_t batch_index) {
    const std::size_t begin = batch_index * plan.batch_size;
    if (begin >= plan.order.size()) {
        throw ConfigError("gather_batch: batch index " + std::to_string(batch_index) +
                          " out of range");
    }
    const std::size_t count = std::min(plan.batch_size, plan.order.size() - begin);
    Batch batch;
    batch.x = Matrix(count, ds.dim());
    batch.t = Matrix(count, ds.num_classes());
    batch.labels.resize(count);
    for (std::size_t i = 0; i < count; ++i) {
        const std::size_t src = plan.order[begin + i];
        std::copy(ds.inputs.row(src), ds.inputs.row(src) + ds.dim(), batch.x.row(i));
        std::copy(ds.targets.row(src), ds.targets.row(src) + ds.num_classes(),
                  batch.t.row(i));
        batch.labels[i] = ds.labels[src];
    }
    return batch;
}

EpochBatches epoch_batches(const Dataset& ds, std::size_t batch_size, std::uint64_t seed,
                           std::size_t epoch) {
    return EpochBatches(ds, make_batch_plan(ds.size(), batch_size, seed, epoch));
}

}  // namespace advprop
