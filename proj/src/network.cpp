#include "advprop/network.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>

#include "advprop/errors.hpp"

namespace advprop {

namespace {

constexpr double kInitStdDev = 0.01;
constexpr double kProbClamp = 1e-12;

std::atomic<std::uint64_t> g_forwards{0};
std::atomic<std::uint64_t> g_backwards{0};

}  // namespace

namespace pass_counters {
void reset() noexcept {
    g_forwards.store(0);
    g_backwards.store(0);
}
std::uint64_t forwards() noexcept { return g_forwards.load(); }
std::uint64_t backwards() noexcept { return g_backwards.load(); }
}  // namespace pass_counters

const char* to_string(Activation a) {
    switch (a) {
        case Activation::Logistic: return "logistic";
        case Activation::Tanh: return "tanh";
        case Activation::Relu: return "relu";
        case Activation::Softmax: return "softmax";
    }
    return "?";
}

const char* to_string(Loss l) {
    switch (l) {
        case Loss::CrossEntropyLogistic: return "ce_logistic";
        case Loss::CrossEntropySoftmax: return "ce_softmax";
    }
    return "?";
}

Activation activation_from_string(const std::string& s) {
    if (s == "logistic") return Activation::Logistic;
    if (s == "tanh") return Activation::Tanh;
    if (s == "relu") return Activation::Relu;
    if (s == "softmax") return Activation::Softmax;
    throw ConfigError("unknown activation '" + s + "' (expected logistic|tanh|relu|softmax)");
}

Loss loss_from_string(const std::string& s) {
    if (s == "ce_logistic") return Loss::CrossEntropyLogistic;
    if (s == "ce_softmax") return Loss::CrossEntropySoftmax;
    throw ConfigError("unknown loss '" + s + "' (expected ce_logistic|ce_softmax)");
}

Network::Network(std::size_t input_dim, std::vector<DenseLayer> layers, Loss loss)
    : input_dim_(input_dim), layers_(std::move(layers)), loss_(loss) {
    if (layers_.empty()) throw ConfigError("Network: at least one layer required");
    std::size_t expected_in = input_dim_;
    for (std::size_t i = 0; i < layers_.size(); ++i) {
        const DenseLayer& l = layers_[i];
        if (l.weights.cols() != expected_in) {
            throw ConfigError("Network: layer " + std::to_string(i) + " expects input width " +
                              std::to_string(l.weights.cols()) + " but receives " +
                              std::to_string(expected_in));
        }
        if (l.biases.size() != l.weights.rows()) {
            throw ConfigError("Network: layer " + std::to_string(i) +
                              " bias length does not match unit count");
        }
        if (l.activation == Activation::Softmax && i + 1 != layers_.size()) {
            throw ConfigError("Network: softmax is only allowed on the final layer");
        }
        ensure_finite(l.weights, "Network weights");
        expected_in = l.weights.rows();
    }
    const Activation final_act = layers_.back().activation;
    if (loss_ == Loss::CrossEntropyLogistic && final_act != Activation::Logistic) {
        throw ConfigError("Network: ce_logistic loss requires a logistic final layer");
    }
    if (loss_ == Loss::CrossEntropySoftmax && final_act != Activation::Softmax) {
        throw ConfigError("Network: ce_softmax loss requires a softmax final layer");
    }
}

Network init_network(const std::vector<std::size_t>& arch, Activation hidden_activation,
                     Loss loss, std::uint64_t seed) {
    if (arch.size() < 2) throw ConfigError("init_network: need at least input and output sizes");
    for (std::size_t s : arch) {
        if (s == 0) throw ConfigError("init_network: layer sizes must be positive");
    }
    if (hidden_activation == Activation::Softmax) {
        throw ConfigError("init_network: softmax is reserved for the final layer");
    }
    const Activation final_act =
        loss == Loss::CrossEntropyLogistic ? Activation::Logistic : Activation::Softmax;

    Rng rng(seed);
    std::vector<DenseLayer> layers;
    layers.reserve(arch.size() - 1);
    for (std::size_t i = 1; i < arch.size(); ++i) {
        const std::size_t out = arch[i], in = arch[i - 1];
        DenseLayer layer;
        layer.weights = Matrix(out, in);
        double* w = layer.weights.data();
        for (std::size_t j = 0; j < out * in; ++j) w[j] = rng.normal(0.0, kInitStdDev);
        layer.biases.assign(out, 0.0);
        layer.activation = (i + 1 == arch.size()) ? final_act : hidden_activation;
        layers.push_back(std::move(layer));
    }
    return Network(arch[0], std::move(layers), loss);
}

namespace {

// pre = x * W^T + b, fused so the output is scanned exactly once.
Matrix affine(const Matrix& x, const Matrix& w, const std::vector<double>& b) {
    const std::size_t n = x.rows(), k = x.cols(), out = w.rows();
    Matrix pre(n, out);
    for (std::size_t i = 0; i < n; ++i) {
        const double* xi = x.row(i);
        double* pi = pre.row(i);
        for (std::size_t o = 0; o < out; ++o) {
            const double* wo = w.row(o);
            double acc[8] = {0, 0, 0, 0, 0, 0, 0, 0};
            std::size_t kk = 0;
            for (; kk + 8 <= k; kk += 8) {
                for (std::size_t u = 0; u < 8; ++u) acc[u] += xi[kk + u] * wo[kk + u];
            }
            double s = ((acc[0] + acc[1]) + (acc[2] + acc[3])) +
                       ((acc[4] + acc[5]) + (acc[6] + acc[7]));
            for (; kk < k; ++kk) s += xi[kk] * wo[kk];
            pi[o] = s + b[o];
        }
    }
    ensure_finite(pre, "forward pre-activation");
    return pre;
}

Matrix apply_activation(Activation kind, const Matrix& pre) {
    Matrix out(pre.rows(), pre.cols());
    const std::size_t n = pre.size();
    switch (kind) {
        case Activation::Logistic:
            for (std::size_t i = 0; i < n; ++i)
                out.data()[i] = 1.0 / (1.0 + std::exp(-pre.data()[i]));
            break;
        case Activation::Tanh:
            for (std::size_t i = 0; i < n; ++i) out.data()[i] = std::tanh(pre.data()[i]);
            break;
        case Activation::Relu:
            for (std::size_t i = 0; i < n; ++i)
                out.data()[i] = pre.data()[i] > 0.0 ? pre.data()[i] : 0.0;
            break;
        case Activation::Softmax:
            // Row-wise with max subtraction.
            for (std::size_t r = 0; r < pre.rows(); ++r) {
                const double* p = pre.row(r);
                double* q = out.row(r);
                double mx = p[0];
                for (std::size_t c = 1; c < pre.cols(); ++c) mx = std::max(mx, p[c]);
                double sum = 0.0;
                for (std::size_t c = 0; c < pre.cols(); ++c) {
                    q[c] = std::exp(p[c] - mx);
                    sum += q[c];
                }
                for (std::size_t c = 0; c < pre.cols(); ++c) q[c] /= sum;
            }
            break;
    }
    return out;
}

Matrix draw_mask(std::size_t rows, std::size_t cols, double rate, Rng& rng) {
    const double keep_scale = 1.0 / (1.0 - rate);
    Matrix mask(rows, cols);
    double* m = mask.data();
    for (std::size_t i = 0; i < rows * cols; ++i) {
        m[i] = rng.uniform01() >= rate ? keep_scale : 0.0;
    }
    return mask;
}

void check_dropout(const DropoutSpec& d) {
    if (d.input_rate < 0.0 || d.input_rate >= 1.0 || d.hidden_rate < 0.0 ||
        d.hidden_rate >= 1.0) {
        throw ConfigError("dropout rates must lie in [0, 1)");
    }
}

ForwardTrace forward_impl(const Network& net, const Matrix& x, const DropoutSpec* dropout,
                          Rng* rng) {
    if (net.layer_count() == 0) throw ConfigError("forward: empty network");
    if (x.cols() != net.input_dim()) {
        throw ShapeError("forward: input width " + std::to_string(x.cols()) +
                         " does not match network input_dim " +
                         std::to_string(net.input_dim()));
    }
    if (dropout) check_dropout(*dropout);
    const std::size_t n_layers = net.layer_count();
    const bool masking =
        dropout && (dropout->input_rate > 0.0 || dropout->hidden_rate > 0.0);

    ForwardTrace trace;
    trace.pre.reserve(n_layers);
    trace.act.reserve(n_layers);
    trace.input = x;
    if (masking) {
        trace.masks.resize(n_layers);
        if (dropout->input_rate > 0.0) {
            trace.masks[0] = draw_mask(x.rows(), x.cols(), dropout->input_rate, *rng);
            trace.input = hadamard(trace.input, trace.masks[0]);
        }
    }

    Matrix carry;  // masked activation feeding the next layer
    const Matrix* cur = &trace.input;
    for (std::size_t li = 0; li < n_layers; ++li) {
        const DenseLayer& layer = net.layer(li);
        trace.pre.push_back(affine(*cur, layer.weights, layer.biases));
        trace.act.push_back(apply_activation(layer.activation, trace.pre.back()));
        cur = &trace.act.back();
        const bool hidden = li + 1 < n_layers;
        if (hidden && masking && dropout->hidden_rate > 0.0) {
            trace.masks[li + 1] =
                draw_mask(cur->rows(), cur->cols(), dropout->hidden_rate, *rng);
            carry = hadamard(*cur, trace.masks[li + 1]);
            cur = &carry;
        }
    }
    g_forwards.fetch_add(1);
    return trace;
}

void check_one_hot(const Matrix& t) {
    for (std::size_t r = 0; r < t.rows(); ++r) {
        const double* p = t.row(r);
        std::size_t ones = 0;
        for (std::size_t c = 0; c < t.cols(); ++c) {
            if (p[c] == 1.0) {
                ++ones;
            } else if (p[c] != 0.0) {
                throw DataError("targets: row " + std::to_string(r) + " is not one-hot");
            }
        }
        if (ones != 1) {
            throw DataError("targets: row " + std::to_string(r) + " is not one-hot");
        }
    }
}

}  // namespace

ForwardTrace forward(const Network& net, const Matrix& x) {
    return forward_impl(net, x, nullptr, nullptr);
}

ForwardTrace forward(const Network& net, const Matrix& x, const DropoutSpec& dropout,
                     Rng& rng) {
    return forward_impl(net, x, &dropout, &rng);
}

double loss_value(const ForwardTrace& trace, const Matrix& targets, Loss kind) {
    const Matrix& y = trace.output();
    if (y.rows() != targets.rows() || y.cols() != targets.cols()) {
        throw ShapeError("loss_value: output " + y.shape_str() + " vs targets " +
                         targets.shape_str());
    }
    check_one_hot(targets);
    const std::size_t n = y.rows(), c = y.cols();
    double total = 0.0;
    for (std::size_t r = 0; r < n; ++r) {
        const double* py = y.row(r);
        const double* pt = targets.row(r);
        for (std::size_t j = 0; j < c; ++j) {
            const double yj = std::clamp(py[j], kProbClamp, 1.0 - kProbClamp);
            if (kind == Loss::CrossEntropySoftmax) {
                total -= pt[j] * std::log(yj);
            } else {
                total -= pt[j] * std::log(yj) + (1.0 - pt[j]) * std::log(1.0 - yj);
            }
        }
    }
    return total / static_cast<double>(n);
}

BackwardResult backward(const Network& net, const ForwardTrace& trace,
                        const Matrix& targets) {
    const std::size_t n_layers = net.layer_count();
    if (trace.pre.size() != n_layers || trace.act.size() != n_layers) {
        throw InternalError("backward: trace does not match the network layer count");
    }
    if (trace.input.cols() != net.input_dim()) {
        throw InternalError("backward: trace input width does not match the network");
    }
    for (std::size_t li = 0; li < n_layers; ++li) {
        if (trace.act[li].cols() != net.layer(li).weights.rows()) {
            throw InternalError("backward: trace layer " + std::to_string(li) +
                                " width does not match the network");
        }
    }
    const Matrix& y = trace.output();
    if (y.rows() != targets.rows() || y.cols() != targets.cols()) {
        throw ShapeError("backward: output " + y.shape_str() + " vs targets " +
                         targets.shape_str());
    }

    const std::size_t n = trace.input.rows();
    const double inv_n = 1.0 / static_cast<double>(n);
    const bool masking = !trace.masks.empty();

    // Output delta: both cross-entropy pairings reduce to (y - t),
    // scaled here by 1/n so every gradient is already a batch mean.
    Matrix delta(y.rows(), y.cols());
    for (std::size_t i = 0; i < y.size(); ++i) {
        delta.data()[i] = (y.data()[i] - targets.data()[i]) * inv_n;
    }

    BackwardResult result;
    result.weight_grads.resize(n_layers);
    result.bias_grads.resize(n_layers);

    for (std::size_t li = n_layers; li-- > 0;) {
        // Input the layer saw during the forward pass (mask replayed).
        const Matrix* layer_in = nullptr;
        Matrix masked_in;
        if (li == 0) {
            layer_in = &trace.input;
        } else if (masking && !trace.masks[li].empty()) {
            masked_in = hadamard(trace.act[li - 1], trace.masks[li]);
            layer_in = &masked_in;
        } else {
            layer_in = &trace.act[li - 1];
        }

        result.weight_grads[li] = matmul_tn(delta, *layer_in);
        std::vector<double>& bg = result.bias_grads[li];
        bg.assign(delta.cols(), 0.0);
        for (std::size_t r = 0; r < delta.rows(); ++r) {
            const double* dr = delta.row(r);
            for (std::size_t c = 0; c < delta.cols(); ++c) bg[c] += dr[c];
        }

        Matrix g = matmul(delta, net.layer(li).weights);  // n x in_width
        if (li == 0) {
            if (masking && !trace.masks[0].empty()) g = hadamard(g, trace.masks[0]);
            result.input_grad = std::move(g);
            break;
        }
        if (masking && !trace.masks[li].empty()) g = hadamard(g, trace.masks[li]);
        const Matrix& a = trace.act[li - 1];
        const Activation kind = net.layer(li - 1).activation;
        delta = Matrix(g.rows(), g.cols());
        for (std::size_t i = 0; i < g.size(); ++i) {
            const double av = a.data()[i];
            double d = 0.0;
            switch (kind) {
                case Activation::Logistic: d = av * (1.0 - av); break;
                case Activation::Tanh: d = 1.0 - av * av; break;
                case Activation::Relu: d = av > 0.0 ? 1.0 : 0.0; break;
                case Activation::Softmax:
                    throw InternalError("backward: softmax on a hidden layer");
            }
            delta.data()[i] = g.data()[i] * d;
        }
    }
    g_backwards.fetch_add(1);
    return result;
}

}  // namespace advprop
