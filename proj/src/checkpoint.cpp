#include "advprop/checkpoint.hpp"

#include <cstdio>
#include <cstring>
#include <fstream>

#include "advprop/errors.hpp"

namespace advprop {

namespace {

constexpr char kMagic[4] = {'A', 'B', 'P', 'C'};
constexpr std::uint32_t kVersion = 1;
constexpr std::uint64_t kFnvOffset = 1469598103934665603ULL;
constexpr std::uint64_t kFnvPrime = 1099511628211ULL;

void write_u32_le(std::ostream& out, std::uint32_t v) {
    unsigned char b[4];
    for (int i = 0; i < 4; ++i) b[i] = static_cast<unsigned char>(v >> (8 * i));
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
        throw FormatError(path.string() + ": truncated checkpoint");
    }
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= std::uint32_t(b[i]) << (8 * i);
    return v;
}

std::uint64_t read_u64_le(std::istream& in, const std::filesystem::path& path) {
    unsigned char b[8];
    if (!in.read(reinterpret_cast<char*>(b), 8)) {
        throw FormatError(path.string() + ": truncated checkpoint");
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

std::uint8_t activation_code(Activation a) { return static_cast<std::uint8_t>(a); }

Activation activation_from_code(std::uint8_t code, const std::filesystem::path& path) {
    if (code > 3) {
        throw FormatError(path.string() + ": unknown activation code " + std::to_string(code));
    }
    return static_cast<Activation>(code);
}

void fnv_mix(std::uint64_t& h, const void* data, std::size_t n) {
    const unsigned char* p = static_cast<const unsigned char*>(data);
    for (std::size_t i = 0; i < n; ++i) {
        h ^= p[i];
        h *= kFnvPrime;
    }
}

}  // namespace

void save_checkpoint(const std::filesystem::path& path, const Network& net,
                     const CheckpointMeta& meta) {
    if (net.layer_count() == 0) throw ConfigError("save_checkpoint: empty network");
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw FormatError("cannot open " + path.string() + " for writing");

    out.write(kMagic, 4);
    write_u32_le(out, kVersion);
    write_u32_le(out, static_cast<std::uint32_t>(net.layer_count()));
    write_u32_le(out, static_cast<std::uint32_t>(net.input_dim()));
    for (std::size_t li = 0; li < net.layer_count(); ++li) {
        write_u32_le(out, static_cast<std::uint32_t>(net.layer(li).weights.rows()));
        out.put(static_cast<char>(activation_code(net.layer(li).activation)));
    }
    out.put(static_cast<char>(static_cast<std::uint8_t>(net.loss())));
    write_u64_le(out, meta.epoch);
    write_u64_le(out, meta.seed);
    write_u64_le(out, meta.config_hash);
    out.put(static_cast<char>(static_cast<std::uint8_t>(meta.preprocess)));
    for (std::size_t li = 0; li < net.layer_count(); ++li) {
        const DenseLayer& layer = net.layer(li);
        for (std::size_t i = 0; i < layer.weights.size(); ++i) {
            write_f64_le(out, layer.weights.data()[i]);
        }
        for (double b : layer.biases) write_f64_le(out, b);
    }
    if (!out) throw FormatError("failed writing checkpoint " + path.string());
}

LoadedCheckpoint load_checkpoint(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw FormatError("cannot open checkpoint " + path.string());

    char magic[4];
    if (!in.read(magic, 4) || std::memcmp(magic, kMagic, 4) != 0) {
        char got[16];
        std::snprintf(got, sizeof(got), "%02x%02x%02x%02x", (unsigned char)magic[0],
                      (unsigned char)magic[1], (unsigned char)magic[2],
                      (unsigned char)magic[3]);
        throw FormatError(path.string() + ": bad checkpoint magic " + got +
                          " at offset 0 (expected ABPC)");
    }
    const std::uint32_t version = read_u32_le(in, path);
    if (version != kVersion) {
        throw FormatError(path.string() + ": unsupported checkpoint version " +
                          std::to_string(version));
    }
    const std::uint32_t layer_count = read_u32_le(in, path);
    const std::uint32_t input_dim = read_u32_le(in, path);
    if (layer_count == 0 || layer_count > 1024) {
        throw FormatError(path.string() + ": implausible layer count " +
                          std::to_string(layer_count));
    }

    std::vector<std::uint32_t> out_units(layer_count);
    std::vector<Activation> acts(layer_count);
    for (std::uint32_t li = 0; li < layer_count; ++li) {
        out_units[li] = read_u32_le(in, path);
        const int code = in.get();
        if (code == EOF) throw FormatError(path.string() + ": truncated checkpoint");
        acts[li] = activation_from_code(static_cast<std::uint8_t>(code), path);
    }
    const int loss_code = in.get();
    if (loss_code == EOF) throw FormatError(path.string() + ": truncated checkpoint");
    if (loss_code > 1) {
        throw FormatError(path.string() + ": unknown loss code " + std::to_string(loss_code));
    }
    CheckpointMeta meta;
    meta.epoch = read_u64_le(in, path);
    meta.seed = read_u64_le(in, path);
    meta.config_hash = read_u64_le(in, path);
    const int pre_code = in.get();
    if (pre_code == EOF) throw FormatError(path.string() + ": truncated checkpoint");
    if (pre_code > 4) {
        throw FormatError(path.string() + ": unknown preprocess code " +
                          std::to_string(pre_code));
    }
    meta.preprocess = static_cast<PreprocessCode>(pre_code);

    std::vector<DenseLayer> layers;
    layers.reserve(layer_count);
    std::size_t in_width = input_dim;
    for (std::uint32_t li = 0; li < layer_count; ++li) {
        DenseLayer layer;
        layer.activation = acts[li];
        layer.weights = Matrix(out_units[li], in_width);
        for (std::size_t i = 0; i < layer.weights.size(); ++i) {
            layer.weights.data()[i] = read_f64_le(in, path);
        }
        layer.biases.resize(out_units[li]);
        for (auto& b : layer.biases) b = read_f64_le(in, path);
        in_width = out_units[li];
        layers.push_back(std::move(layer));
    }

    return LoadedCheckpoint{Network(input_dim, std::move(layers),
                                    static_cast<Loss>(loss_code)),
                            meta};
}

std::uint64_t model_id(const Network& net) {
    std::uint64_t h = kFnvOffset;
    for (std::size_t li = 0; li < net.layer_count(); ++li) {
        const DenseLayer& layer = net.layer(li);
        fnv_mix(h, layer.weights.data(), layer.weights.size() * sizeof(double));
        fnv_mix(h, layer.biases.data(), layer.biases.size() * sizeof(double));
    }
    return h;
}

std::string model_id_hex(const Network& net) {
    char buf[20];
    std::snprintf(buf, sizeof(buf), "%016llx",
                  static_cast<unsigned long long>(model_id(net)));
    return buf;
}

bool preprocess_needs_sidecar(PreprocessCode code) {
    return code == PreprocessCode::Scale01Simple || code == PreprocessCode::Scale01Zca ||
           code == PreprocessCode::Scale01PerFeature;
}

}  // namespace advprop
