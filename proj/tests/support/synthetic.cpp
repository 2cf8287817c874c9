#include "synthetic.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdlib>
#include <fstream>

#include "advprop/errors.hpp"
#include "advprop/rng.hpp"

namespace advprop::testing {

namespace fs = std::filesystem;

namespace {

constexpr std::size_t kSide = 28;
constexpr std::size_t kDim = kSide * kSide;

void write_u32_be(std::ostream& out, std::uint32_t v) {
    unsigned char b[4] = {static_cast<unsigned char>(v >> 24),
                          static_cast<unsigned char>(v >> 16),
                          static_cast<unsigned char>(v >> 8),
                          static_cast<unsigned char>(v)};
    out.write(reinterpret_cast<const char*>(b), 4);
}

struct Blob {
    double cx, cy, sigma, amplitude;
};

std::vector<std::array<double, kDim>> class_prototypes(std::uint64_t seed) {
    std::vector<std::array<double, kDim>> protos(10);
    for (int c = 0; c < 10; ++c) {
        Rng rng(mix64(seed) ^ (0x70726f746fULL + static_cast<std::uint64_t>(c)));
        Blob blobs[3];
        for (Blob& b : blobs) {
            b.cx = 6.0 + 16.0 * rng.uniform01();
            b.cy = 6.0 + 16.0 * rng.uniform01();
            b.sigma = 2.0 + 2.0 * rng.uniform01();
            b.amplitude = 0.5 + 0.5 * rng.uniform01();
        }
        for (std::size_t y = 0; y < kSide; ++y) {
            for (std::size_t x = 0; x < kSide; ++x) {
                double v = 0.0;
                for (const Blob& b : blobs) {
                    const double dx = static_cast<double>(x) - b.cx;
                    const double dy = static_cast<double>(y) - b.cy;
                    v += b.amplitude *
                         std::exp(-(dx * dx + dy * dy) / (2.0 * b.sigma * b.sigma));
                }
                protos[static_cast<std::size_t>(c)][y * kSide + x] = std::min(v, 1.0);
            }
        }
    }
    return protos;
}

}  // namespace

Dataset synthetic_digits(std::size_t n, std::uint64_t seed, std::string name) {
    const auto protos = class_prototypes(seed);
    Rng rng(mix64(seed) ^ 0x73616d706c6573ULL);

    Matrix inputs(n, kDim);
    std::vector<int> labels(n);
    for (std::size_t i = 0; i < n; ++i) {
        const int label = static_cast<int>(i % 10);
        labels[i] = label;
        const auto& proto = protos[static_cast<std::size_t>(label)];
        const int dx = static_cast<int>(rng.below(5)) - 2;
        const int dy = static_cast<int>(rng.below(5)) - 2;
        const double intensity = 0.75 + 0.25 * rng.uniform01();
        double* row = inputs.row(i);
        for (std::size_t y = 0; y < kSide; ++y) {
            for (std::size_t x = 0; x < kSide; ++x) {
                const int sy = static_cast<int>(y) - dy;
                const int sx = static_cast<int>(x) - dx;
                double v = 0.0;
                if (sy >= 0 && sy < int(kSide) && sx >= 0 && sx < int(kSide)) {
                    v = proto[std::size_t(sy) * kSide + std::size_t(sx)] * intensity;
                }
                v += rng.normal(0.0, 0.08);
                v = std::clamp(v, 0.0, 1.0);
                row[y * kSide + x] = std::round(v * 255.0);
            }
        }
    }
    return make_dataset(std::move(inputs), std::move(labels), 10, std::move(name));
}

void write_idx_pair(const fs::path& images_path, const fs::path& labels_path,
                    const std::vector<std::uint8_t>& pixels,
                    const std::vector<std::uint8_t>& labels, std::size_t rows,
                    std::size_t cols) {
    if (pixels.size() != labels.size() * rows * cols) {
        throw DataError("write_idx_pair: pixel count does not match labels");
    }
    std::ofstream img(images_path, std::ios::binary | std::ios::trunc);
    write_u32_be(img, 0x00000803);
    write_u32_be(img, static_cast<std::uint32_t>(labels.size()));
    write_u32_be(img, static_cast<std::uint32_t>(rows));
    write_u32_be(img, static_cast<std::uint32_t>(cols));
    img.write(reinterpret_cast<const char*>(pixels.data()),
              static_cast<std::streamsize>(pixels.size()));

    std::ofstream lab(labels_path, std::ios::binary | std::ios::trunc);
    write_u32_be(lab, 0x00000801);
    write_u32_be(lab, static_cast<std::uint32_t>(labels.size()));
    lab.write(reinterpret_cast<const char*>(labels.data()),
              static_cast<std::streamsize>(labels.size()));
}

void write_dataset_as_idx(const fs::path& images_path, const fs::path& labels_path,
                          const Dataset& raw, std::size_t rows, std::size_t cols) {
    std::vector<std::uint8_t> pixels(raw.inputs.size());
    for (std::size_t i = 0; i < raw.inputs.size(); ++i) {
        pixels[i] = static_cast<std::uint8_t>(raw.inputs.data()[i]);
    }
    std::vector<std::uint8_t> labels(raw.labels.size());
    for (std::size_t i = 0; i < raw.labels.size(); ++i) {
        labels[i] = static_cast<std::uint8_t>(raw.labels[i]);
    }
    write_idx_pair(images_path, labels_path, pixels, labels, rows, cols);
}

namespace {

void write_pattern_idx(const fs::path& images, const fs::path& labels, std::size_t n) {
    std::vector<std::uint8_t> pixels(n * kDim);
    for (std::size_t i = 0; i < pixels.size(); ++i) {
        pixels[i] = static_cast<std::uint8_t>((i * 31 + 7) & 0xff);
    }
    std::vector<std::uint8_t> label_bytes(n);
    for (std::size_t i = 0; i < n; ++i) label_bytes[i] = static_cast<std::uint8_t>(i % 10);
    write_idx_pair(images, labels, pixels, label_bytes, kSide, kSide);
}

}  // namespace

void write_pattern_mnist_dir(const fs::path& dir, std::size_t n_train, std::size_t n_test) {
    fs::create_directories(dir);
    write_pattern_idx(dir / "train-images-idx3-ubyte", dir / "train-labels-idx1-ubyte",
                      n_train);
    write_pattern_idx(dir / "t10k-images-idx3-ubyte", dir / "t10k-labels-idx1-ubyte",
                      n_test);
}

void write_digits_mnist_dir(const fs::path& dir, std::size_t n_train, std::size_t n_test,
                            std::uint64_t seed) {
    fs::create_directories(dir);
    const Dataset train = synthetic_digits(n_train, seed);
    write_dataset_as_idx(dir / "train-images-idx3-ubyte", dir / "train-labels-idx1-ubyte",
                         train, kSide, kSide);
    const Dataset test = synthetic_digits(n_test, seed + 1);
    write_dataset_as_idx(dir / "t10k-images-idx3-ubyte", dir / "t10k-labels-idx1-ubyte",
                         test, kSide, kSide);
}

void write_pattern_cifar_file(const fs::path& path, std::size_t n,
                              std::uint32_t pattern_seed) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    std::vector<std::uint8_t> record(3073);
    for (std::size_t r = 0; r < n; ++r) {
        record[0] = static_cast<std::uint8_t>((r + pattern_seed) % 10);
        for (std::size_t i = 1; i < record.size(); ++i) {
            record[i] = static_cast<std::uint8_t>((r * 131 + i * 17 + pattern_seed) & 0xff);
        }
        out.write(reinterpret_cast<const char*>(record.data()),
                  static_cast<std::streamsize>(record.size()));
    }
}

void write_pattern_cifar_dir(const fs::path& dir, std::size_t n_per_train_file,
                             std::size_t n_test) {
    fs::create_directories(dir);
    for (int b = 1; b <= 5; ++b) {
        write_pattern_cifar_file(dir / ("data_batch_" + std::to_string(b) + ".bin"),
                                 n_per_train_file, static_cast<std::uint32_t>(b));
    }
    write_pattern_cifar_file(dir / "test_batch.bin", n_test, 99);
}

TempDir::TempDir() {
    char tmpl[] = "/tmp/advprop-test-XXXXXX";
    if (!mkdtemp(tmpl)) throw DataError("TempDir: mkdtemp failed");
    path_ = tmpl;
}

TempDir::~TempDir() {
    std::error_code ec;
    fs::remove_all(path_, ec);
}

}  // namespace advprop::testing
