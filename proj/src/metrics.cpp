#include "advprop/metrics.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <ctime>
#include <fstream>
#include <sstream>

#include "advprop/adversarial.hpp"
#include "advprop/checkpoint.hpp"
#include "advprop/errors.hpp"

namespace advprop {

namespace {

constexpr std::size_t kEvalChunk = 512;

Matrix rows_slice(const Matrix& m, std::size_t begin, std::size_t count) {
    Matrix out(count, m.cols());
    std::copy(m.row(begin), m.row(begin) + count * m.cols(), out.data());
    return out;
}

std::string utc_timestamp() {
    const std::time_t now = std::chrono::system_clock::to_time_t(
        std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&now, &tm);
    char buf[32];
    std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

std::string fmt(double v, const char* spec = "%.6f") {
    char buf[64];
    std::snprintf(buf, sizeof(buf), spec, v);
    return buf;
}

}  // namespace

std::vector<int> predict(const Network& net, const Matrix& inputs) {
    std::vector<int> labels(inputs.rows());
    for (std::size_t begin = 0; begin < inputs.rows(); begin += kEvalChunk) {
        const std::size_t count = std::min(kEvalChunk, inputs.rows() - begin);
        const ForwardTrace trace = forward(net, rows_slice(inputs, begin, count));
        const Matrix& y = trace.output();
        for (std::size_t r = 0; r < count; ++r) {
            const double* row = y.row(r);
            std::size_t best = 0;
            for (std::size_t c = 1; c < y.cols(); ++c) {
                if (row[c] > row[best]) best = c;  // first index wins ties
            }
            labels[begin + r] = static_cast<int>(best);
        }
    }
    return labels;
}

EvalReport error_rate(const Network& net, const Dataset& ds) {
    if (net.output_dim() != ds.num_classes()) {
        throw ShapeError("error_rate: network outputs " + std::to_string(net.output_dim()) +
                         " classes but dataset has " + std::to_string(ds.num_classes()));
    }
    const std::vector<int> predicted = predict(net, ds.inputs);
    EvalReport report;
    report.dataset = ds.name;
    report.n_samples = ds.size();
    report.num_classes = ds.num_classes();
    report.confusion.assign(ds.num_classes() * ds.num_classes(), 0);
    std::size_t wrong = 0;
    for (std::size_t i = 0; i < predicted.size(); ++i) {
        const int truth = ds.labels[i];
        report.confusion[static_cast<std::size_t>(truth) * ds.num_classes() +
                         static_cast<std::size_t>(predicted[i])] += 1;
        if (predicted[i] != truth) ++wrong;
    }
    report.error_rate =
        ds.size() == 0 ? 0.0 : static_cast<double>(wrong) / static_cast<double>(ds.size());
    report.timestamp = utc_timestamp();
    report.model_id = model_id_hex(net);
    return report;
}

Dataset build_adversarial_testset(const Network& source, const Dataset& ds, double epsilon) {
    if (!(epsilon >= 0.0)) throw ConfigError("build_adversarial_testset: epsilon < 0");
    Matrix perturbed(ds.size(), ds.dim());
    for (std::size_t begin = 0; begin < ds.size(); begin += kEvalChunk) {
        const std::size_t count = std::min(kEvalChunk, ds.size() - begin);
        const Matrix x = rows_slice(ds.inputs, begin, count);
        const Matrix t = rows_slice(ds.targets, begin, count);
        const ForwardTrace trace = forward(source, x);
        const BackwardResult grads = backward(source, trace, t);
        const Matrix z = fgsm_perturb(x, grads.input_grad, epsilon);
        std::copy(z.data(), z.data() + z.size(), perturbed.row(begin));
    }
    Dataset out = make_dataset(std::move(perturbed), ds.labels, ds.num_classes(),
                               ds.name + "+fgsm(eps=" + fmt(epsilon, "%.4g") +
                                   ",source=" + model_id_hex(source) + ")");
    out.preprocessing = ds.preprocessing;
    return out;
}

RobustnessReport robustness_eval(const Network& source, const Network& target,
                                 const Dataset& ds, double epsilon) {
    const Dataset adv = build_adversarial_testset(source, ds, epsilon);
    const std::vector<int> clean_pred = predict(target, ds.inputs);
    const std::vector<int> adv_pred = predict(target, adv.inputs);

    std::size_t clean_wrong = 0, adv_wrong = 0;
    std::size_t clean_right = 0, adv_wrong_of_clean_right = 0;
    for (std::size_t i = 0; i < ds.size(); ++i) {
        const bool cw = clean_pred[i] != ds.labels[i];
        const bool aw = adv_pred[i] != ds.labels[i];
        clean_wrong += cw;
        adv_wrong += aw;
        if (!cw) {
            ++clean_right;
            adv_wrong_of_clean_right += aw;
        }
    }
    RobustnessReport report;
    report.source_model = model_id_hex(source);
    report.target_model = model_id_hex(target);
    report.epsilon = epsilon;
    report.n_samples = ds.size();
    const double n = static_cast<double>(ds.size());
    report.clean_error = ds.size() ? clean_wrong / n : 0.0;
    report.adversarial_error = ds.size() ? adv_wrong / n : 0.0;
    report.adv_error_on_clean_correct =
        clean_right ? static_cast<double>(adv_wrong_of_clean_right) /
                          static_cast<double>(clean_right)
                    : 0.0;
    return report;
}

SparsityReport sparsity_report(const Network& net, const Dataset& ds) {
    const std::size_t hidden_layers = net.layer_count() > 0 ? net.layer_count() - 1 : 0;
    SparsityReport report;
    report.n_samples = ds.size();
    report.per_layer.assign(hidden_layers, std::nullopt);

    std::vector<std::size_t> zeros(hidden_layers, 0);
    std::vector<std::size_t> totals(hidden_layers, 0);
    for (std::size_t begin = 0; begin < ds.size(); begin += kEvalChunk) {
        const std::size_t count = std::min(kEvalChunk, ds.size() - begin);
        const ForwardTrace trace = forward(net, rows_slice(ds.inputs, begin, count));
        for (std::size_t li = 0; li < hidden_layers; ++li) {
            if (net.layer(li).activation != Activation::Relu) continue;
            const Matrix& act = trace.act[li];
            for (std::size_t i = 0; i < act.size(); ++i) {
                zeros[li] += act.data()[i] == 0.0;
            }
            totals[li] += act.size();
        }
    }
    std::size_t all_zeros = 0, all_totals = 0;
    for (std::size_t li = 0; li < hidden_layers; ++li) {
        if (net.layer(li).activation != Activation::Relu) continue;
        report.per_layer[li] =
            totals[li] ? static_cast<double>(zeros[li]) / static_cast<double>(totals[li])
                       : 0.0;
        all_zeros += zeros[li];
        all_totals += totals[li];
    }
    if (all_totals > 0) {
        report.overall = static_cast<double>(all_zeros) / static_cast<double>(all_totals);
    }
    return report;
}

void export_filters(const Network& net, std::size_t layer_index,
                    const std::filesystem::path& path) {
    if (layer_index >= net.layer_count()) {
        throw ConfigError("export_filters: layer index " + std::to_string(layer_index) +
                          " out of range");
    }
    const Matrix& w = net.layer(layer_index).weights;
    std::size_t side = 0;
    bool color = false;
    if (w.cols() == 28 * 28) {
        side = 28;
    } else if (w.cols() == 32 * 32 * 3) {
        side = 32;
        color = true;
    } else {
        throw ConfigError("export_filters: layer input width " + std::to_string(w.cols()) +
                          " is not an image geometry (expected 784 or 3072)");
    }

    const std::size_t units = w.rows();
    const std::size_t grid_cols =
        static_cast<std::size_t>(std::ceil(std::sqrt(static_cast<double>(units))));
    const std::size_t grid_rows = (units + grid_cols - 1) / grid_cols;
    const std::size_t width = grid_cols * side;
    const std::size_t height = grid_rows * side;
    const std::size_t channels = color ? 3 : 1;

    std::vector<unsigned char> image(width * height * channels, 0);
    for (std::size_t u = 0; u < units; ++u) {
        const double* row = w.row(u);
        double lo = row[0], hi = row[0];
        for (std::size_t i = 1; i < w.cols(); ++i) {
            lo = std::min(lo, row[i]);
            hi = std::max(hi, row[i]);
        }
        const bool constant = hi == lo;
        const double inv = constant ? 0.0 : 255.0 / (hi - lo);
        const std::size_t tile_r = (u / grid_cols) * side;
        const std::size_t tile_c = (u % grid_cols) * side;
        for (std::size_t y = 0; y < side; ++y) {
            for (std::size_t x = 0; x < side; ++x) {
                for (std::size_t ch = 0; ch < channels; ++ch) {
                    // Inputs store channel-major planes; PPM wants interleaved.
                    const double v = row[ch * side * side + y * side + x];
                    const unsigned char byte =
                        constant ? 127
                                 : static_cast<unsigned char>(
                                       std::lround((v - lo) * inv));
                    image[((tile_r + y) * width + tile_c + x) * channels + ch] = byte;
                }
            }
        }
    }

    std::ofstream out(path, std::ios::binary);
    if (!out) throw FormatError("cannot open " + path.string() + " for writing");
    out << (color ? "P6" : "P5") << "\n" << width << " " << height << "\n255\n";
    out.write(reinterpret_cast<const char*>(image.data()),
              static_cast<std::streamsize>(image.size()));
    if (!out) throw FormatError("failed writing " + path.string());
}

RunAggregate aggregate_runs(const std::vector<std::vector<double>>& per_epoch_errors,
                            std::size_t last_k, std::size_t runs) {
    if (per_epoch_errors.size() != runs) {
        throw ConfigError("aggregate_runs: got " + std::to_string(per_epoch_errors.size()) +
                          " runs, expected " + std::to_string(runs));
    }
    if (runs == 0 || last_k == 0) throw ConfigError("aggregate_runs: empty aggregation");
    RunAggregate agg;
    agg.last_k = last_k;
    agg.runs = runs;
    for (const auto& errs : per_epoch_errors) {
        if (errs.size() < last_k) {
            throw ConfigError("aggregate_runs: run has " + std::to_string(errs.size()) +
                              " epochs, needs at least " + std::to_string(last_k));
        }
        double s = 0.0;
        for (std::size_t i = errs.size() - last_k; i < errs.size(); ++i) s += errs[i];
        agg.per_run_means.push_back(s / static_cast<double>(last_k));
    }
    double s = 0.0;
    for (double m : agg.per_run_means) s += m;
    agg.mean = s / static_cast<double>(runs);
    if (runs > 1) {
        double sq = 0.0;
        for (double m : agg.per_run_means) sq += (m - agg.mean) * (m - agg.mean);
        agg.stddev = std::sqrt(sq / static_cast<double>(runs - 1));
    }
    return agg;
}

std::string format_aggregate_line(const std::string& arch, const std::string& units,
                                  const RunAggregate& agg) {
    char buf[128];
    std::snprintf(buf, sizeof(buf), "%s  %s  %.2f±%.2f%%", arch.c_str(), units.c_str(),
                  agg.mean * 100.0, agg.stddev * 100.0);
    return buf;
}

std::string to_record(const EvalReport& r) {
    std::ostringstream os;
    os << "record=eval dataset=" << r.dataset << " model=" << r.model_id
       << " n=" << r.n_samples << " error_rate=" << fmt(r.error_rate)
       << " timestamp=" << r.timestamp;
    return os.str();
}

std::string to_record(const RobustnessReport& r) {
    std::ostringstream os;
    os << "record=robustness source=" << r.source_model << " target=" << r.target_model
       << " epsilon=" << fmt(r.epsilon, "%.4g") << " n=" << r.n_samples
       << " clean_error=" << fmt(r.clean_error)
       << " adversarial_error=" << fmt(r.adversarial_error)
       << " adv_error_on_clean_correct=" << fmt(r.adv_error_on_clean_correct);
    return os.str();
}

std::string to_record(const SparsityReport& r) {
    std::ostringstream os;
    os << "record=sparsity n=" << r.n_samples;
    for (std::size_t i = 0; i < r.per_layer.size(); ++i) {
        os << " layer" << i << "="
           << (r.per_layer[i] ? fmt(*r.per_layer[i]) : std::string("na"));
    }
    os << " overall=" << (r.overall ? fmt(*r.overall) : std::string("na"));
    return os.str();
}

std::string to_record(const RunAggregate& r) {
    std::ostringstream os;
    os << "record=aggregate runs=" << r.runs << " last_k=" << r.last_k
       << " mean=" << fmt(r.mean) << " stddev=" << fmt(r.stddev) << " per_run=";
    for (std::size_t i = 0; i < r.per_run_means.size(); ++i) {
        if (i) os << ",";
        os << fmt(r.per_run_means[i]);
    }
    return os.str();
}

std::string summary(const EvalReport& r) {
    std::ostringstream os;
    os << "dataset        " << r.dataset << "\n"
       << "model          " << r.model_id << "\n"
       << "samples        " << r.n_samples << "\n"
       << "error rate     " << fmt(r.error_rate * 100.0, "%.2f") << "%\n";
    return os.str();
}

std::string summary(const RobustnessReport& r) {
    std::ostringstream os;
    os << "source model            " << r.source_model << "\n"
       << "target model            " << r.target_model << "\n"
       << "epsilon                 " << fmt(r.epsilon, "%.4g") << "\n"
       << "samples                 " << r.n_samples << "\n"
       << "clean error             " << fmt(r.clean_error * 100.0, "%.2f") << "%\n"
       << "adversarial error       " << fmt(r.adversarial_error * 100.0, "%.2f") << "%\n"
       << "adv error (clean-correct subset)  "
       << fmt(r.adv_error_on_clean_correct * 100.0, "%.2f") << "%\n";
    return os.str();
}

std::string summary(const SparsityReport& r) {
    std::ostringstream os;
    os << "samples " << r.n_samples << "\n";
    for (std::size_t i = 0; i < r.per_layer.size(); ++i) {
        os << "hidden layer " << i << "  zero fraction  "
           << (r.per_layer[i] ? fmt(*r.per_layer[i] * 100.0, "%.1f") + "%"
                              : std::string("n/a (not ReLU)"))
           << "\n";
    }
    os << "overall        zero fraction  "
       << (r.overall ? fmt(*r.overall * 100.0, "%.1f") + "%"
                     : std::string("n/a (no ReLU hidden layers)"))
       << "\n";
    return os.str();
}

}  // namespace advprop
