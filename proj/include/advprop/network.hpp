#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "advprop/matrix.hpp"
#include "advprop/rng.hpp"

namespace advprop {

enum class Activation { Logistic, Tanh, Relu, Softmax };
enum class Loss { CrossEntropyLogistic, CrossEntropySoftmax };

const char* to_string(Activation a);
const char* to_string(Loss l);
Activation activation_from_string(const std::string& s);
Loss loss_from_string(const std::string& s);

struct DenseLayer {
    Matrix weights;              // out_units x in_units
    std::vector<double> biases;  // length out_units
    Activation activation = Activation::Logistic;
};

/// Ordered dense layers plus the output-loss kind. Construction validates
/// the wiring: widths must chain, softmax may only appear on the final
/// layer, and the loss kind pins the final activation
/// (CrossEntropyLogistic <-> Logistic, CrossEntropySoftmax <-> Softmax).
class Network {
public:
    Network() = default;
    Network(std::size_t input_dim, std::vector<DenseLayer> layers, Loss loss);

    std::size_t input_dim() const { return input_dim_; }
    std::size_t output_dim() const {
        return layers_.empty() ? 0 : layers_.back().weights.rows();
    }
    std::size_t layer_count() const { return layers_.size(); }
    const DenseLayer& layer(std::size_t i) const { return layers_[i]; }
    /// Mutation requires exclusive access to the network.
    DenseLayer& layer(std::size_t i) { return layers_[i]; }
    const std::vector<DenseLayer>& layers() const { return layers_; }
    Loss loss() const { return loss_; }

private:
    std::size_t input_dim_ = 0;
    std::vector<DenseLayer> layers_;
    Loss loss_ = Loss::CrossEntropyLogistic;
};

struct DropoutSpec {
    double input_rate = 0.0;   // in [0, 1)
    double hidden_rate = 0.0;  // in [0, 1)
};

/// Per-call cache of everything the backward pass needs. `act` holds the
/// activations before any dropout mask; masks carry the inverted-dropout
/// scale 1/(1-rate) baked in. masks[0] covers the input, masks[l] covers
/// act[l-1]; an empty matrix means "no mask on this slot", and the whole
/// vector is empty for eval-mode traces.
struct ForwardTrace {
    Matrix input;  // layer-0 input, after the input mask if one was drawn
    std::vector<Matrix> pre;
    std::vector<Matrix> act;
    std::vector<Matrix> masks;

    const Matrix& output() const { return act.back(); }
};

struct BackwardResult {
    std::vector<Matrix> weight_grads;             // shapes mirror the weights
    std::vector<std::vector<double>> bias_grads;  // shapes mirror the biases
    Matrix input_grad;                            // shaped like the input batch
};

/// Weights ~ N(0, 0.01^2) drawn layer by layer in row-major order from the
/// seeded generator; biases start at zero. The final layer's activation is
/// derived from the loss kind; `hidden_activation` applies to all others.
Network init_network(const std::vector<std::size_t>& arch, Activation hidden_activation,
                     Loss loss, std::uint64_t seed);

/// Eval-mode forward pass: no masks, no scaling, pure in its inputs.
ForwardTrace forward(const Network& net, const Matrix& x);

/// Train-mode forward pass. Inverted dropout: kept units are scaled by
/// 1/(1-rate) at train time so eval needs no adjustment. A rate of zero
/// draws nothing from the generator and reproduces the eval trace exactly.
ForwardTrace forward(const Network& net, const Matrix& x, const DropoutSpec& dropout,
                     Rng& rng);

/// Mean loss over the batch. Targets must be one-hot rows; outputs are
/// clamped to [1e-12, 1-1e-12] before the logarithms.
double loss_value(const ForwardTrace& trace, const Matrix& targets, Loss kind);

/// Analytic gradients of loss_value with respect to every weight, bias and
/// the input batch, averaged over the batch. Dropout masks recorded in the
/// trace are replayed.
BackwardResult backward(const Network& net, const ForwardTrace& trace,
                        const Matrix& targets);

/// Process-wide instrumentation: counts of forward/backward executions.
namespace pass_counters {
void reset() noexcept;
std::uint64_t forwards() noexcept;
std::uint64_t backwards() noexcept;
}  // namespace pass_counters

}  // namespace advprop
