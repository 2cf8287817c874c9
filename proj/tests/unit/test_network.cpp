#include "doctest.h"

#include <cmath>

#include "advprop/errors.hpp"
#include "advprop/network.hpp"
#include "support/oracles.hpp"

using namespace advprop;
using advprop::testing::max_gradient_rel_error;
using advprop::testing::one_hot;
using advprop::testing::random_matrix;

namespace {

Network single_layer_net(std::size_t in, std::size_t out, Activation act, Loss loss,
                         double weight_value = 0.0) {
    DenseLayer layer;
    layer.weights = Matrix(out, in);
    layer.weights.fill(weight_value);
    layer.biases.assign(out, 0.0);
    layer.activation = act;
    std::vector<DenseLayer> layers;
    layers.push_back(std::move(layer));
    return Network(in, std::move(layers), loss);
}

}  // namespace

TEST_CASE("init_network is deterministic and starts with zero biases") {
    const std::vector<std::size_t> arch = {5, 8, 3};
    const Network a = init_network(arch, Activation::Tanh, Loss::CrossEntropyLogistic, 77);
    const Network b = init_network(arch, Activation::Tanh, Loss::CrossEntropyLogistic, 77);
    for (std::size_t li = 0; li < a.layer_count(); ++li) {
        CHECK(bit_identical(a.layer(li).weights, b.layer(li).weights));
        for (double bias : a.layer(li).biases) CHECK(bias == 0.0);
    }
    const Network c = init_network(arch, Activation::Tanh, Loss::CrossEntropyLogistic, 78);
    CHECK_FALSE(bit_identical(a.layer(0).weights, c.layer(0).weights));
}

TEST_CASE("init_network weight spread matches the 0.01 target") {
    // One layer of 1000x1000 gives a million draws.
    const Network net =
        init_network({1000, 1000}, Activation::Relu, Loss::CrossEntropyLogistic, 5);
    const MeanStd ms = mean_std(net.layer(0).weights);
    CHECK(ms.stddev >= 0.0099);
    CHECK(ms.stddev <= 0.0101);
    CHECK(std::abs(ms.mean) < 1e-4);
}

TEST_CASE("init_network validates its inputs") {
    CHECK_THROWS_AS(init_network({5}, Activation::Relu, Loss::CrossEntropyLogistic, 1),
                    ConfigError);
    CHECK_THROWS_AS(init_network({5, 0, 3}, Activation::Relu, Loss::CrossEntropyLogistic, 1),
                    ConfigError);
    CHECK_THROWS_AS(
        init_network({5, 4, 3}, Activation::Softmax, Loss::CrossEntropySoftmax, 1),
        ConfigError);
}

TEST_CASE("network wiring invariants are enforced") {
    // ce_softmax requires a softmax final layer.
    CHECK_THROWS_AS(single_layer_net(4, 3, Activation::Logistic, Loss::CrossEntropySoftmax),
                    ConfigError);
    CHECK_THROWS_AS(single_layer_net(4, 3, Activation::Softmax, Loss::CrossEntropyLogistic),
                    ConfigError);

    // Hidden softmax is rejected.
    std::vector<DenseLayer> layers;
    DenseLayer hidden;
    hidden.weights = Matrix(4, 4);
    hidden.biases.assign(4, 0.0);
    hidden.activation = Activation::Softmax;
    layers.push_back(hidden);
    DenseLayer out;
    out.weights = Matrix(3, 4);
    out.biases.assign(3, 0.0);
    out.activation = Activation::Softmax;
    layers.push_back(out);
    CHECK_THROWS_AS(Network(4, std::move(layers), Loss::CrossEntropySoftmax), ConfigError);
}

TEST_CASE("logistic unit with zero weights outputs one half") {
    const Network net = single_layer_net(3, 1, Activation::Logistic,
                                         Loss::CrossEntropyLogistic);
    Rng rng(3);
    const ForwardTrace trace = forward(net, random_matrix(4, 3, rng, -5.0, 5.0));
    for (std::size_t r = 0; r < 4; ++r) CHECK(trace.output()(r, 0) == doctest::Approx(0.5));
}

TEST_CASE("softmax over equal pre-activations is uniform") {
    const Network net =
        single_layer_net(4, 10, Activation::Softmax, Loss::CrossEntropySoftmax);
    const ForwardTrace trace = forward(net, Matrix(2, 4));
    for (std::size_t r = 0; r < 2; ++r) {
        for (std::size_t c = 0; c < 10; ++c) {
            CHECK(trace.output()(r, c) == doctest::Approx(0.1).epsilon(1e-12));
        }
    }
}

TEST_CASE("softmax rows sum to one for large pre-activations") {
    // Identity weights pass the inputs straight through to the softmax.
    Network net = single_layer_net(16, 16, Activation::Softmax, Loss::CrossEntropySoftmax);
    for (std::size_t i = 0; i < 16; ++i) net.layer(0).weights(i, i) = 1.0;
    Rng rng(11);
    const Matrix x = random_matrix(40, 16, rng, -50.0, 50.0);
    const ForwardTrace trace = forward(net, x);
    for (std::size_t r = 0; r < x.rows(); ++r) {
        double sum = 0.0;
        for (std::size_t c = 0; c < 16; ++c) sum += trace.output()(r, c);
        CHECK(std::abs(sum - 1.0) < 1e-9);
    }
}

TEST_CASE("train-mode forward with zero dropout equals eval mode") {
    const Network net =
        init_network({6, 5, 4}, Activation::Relu, Loss::CrossEntropyLogistic, 21);
    Rng data_rng(4);
    const Matrix x = random_matrix(3, 6, data_rng);
    const ForwardTrace eval_trace = forward(net, x);
    Rng dropout_rng(9);
    const ForwardTrace train_trace = forward(net, x, DropoutSpec{0.0, 0.0}, dropout_rng);
    CHECK(bit_identical(eval_trace.output(), train_trace.output()));
    CHECK(train_trace.masks.empty());
    // No randomness may be consumed when the rates are zero.
    Rng untouched(9);
    CHECK(dropout_rng.next() == untouched.next());
}

TEST_CASE("eval-mode forward is pure") {
    const Network net =
        init_network({6, 5, 4}, Activation::Tanh, Loss::CrossEntropyLogistic, 31);
    Rng rng(5);
    const Matrix x = random_matrix(3, 6, rng);
    const ForwardTrace a = forward(net, x);
    const ForwardTrace b = forward(net, x);
    CHECK(bit_identical(a.output(), b.output()));
}

TEST_CASE("forward rejects width mismatches") {
    const Network net = single_layer_net(4, 2, Activation::Logistic,
                                         Loss::CrossEntropyLogistic);
    CHECK_THROWS_AS(forward(net, Matrix(1, 5)), ShapeError);
}

TEST_CASE("inverted dropout keeps the expected pre-activation") {
    // Fixed positive layer; the masked pre-activation is linear in the
    // mask, so its average over many draws must approach the eval value.
    Network net = single_layer_net(20, 1, Activation::Logistic, Loss::CrossEntropyLogistic);
    Rng wrng(6);
    for (std::size_t i = 0; i < 20; ++i) {
        net.layer(0).weights(0, i) = 0.5 + wrng.uniform01();
    }
    Matrix x(1, 20);
    for (std::size_t i = 0; i < 20; ++i) x(0, i) = 0.5 + wrng.uniform01();

    const double eval_pre = forward(net, x).pre[0](0, 0);
    Rng rng(7);
    const DropoutSpec spec{0.5, 0.0};
    double sum = 0.0;
    const int passes = 100000;
    for (int p = 0; p < passes; ++p) {
        sum += forward(net, x, spec, rng).pre[0](0, 0);
    }
    const double mean = sum / passes;
    CHECK(std::abs(mean - eval_pre) / std::abs(eval_pre) < 0.01);
}

TEST_CASE("loss of a uniform softmax is ln(10)") {
    const Network net =
        single_layer_net(4, 10, Activation::Softmax, Loss::CrossEntropySoftmax);
    const Matrix x(3, 4);
    const Matrix t = one_hot({0, 5, 9}, 10);
    CHECK(loss_value(forward(net, x), t, Loss::CrossEntropySoftmax) ==
          doctest::Approx(std::log(10.0)).epsilon(1e-9));
}

TEST_CASE("loss of all-0.5 logistic outputs over 10 units is 10 ln 2") {
    const Network net =
        single_layer_net(4, 10, Activation::Logistic, Loss::CrossEntropyLogistic);
    const Matrix x(3, 4);
    const Matrix t = one_hot({1, 2, 3}, 10);
    CHECK(loss_value(forward(net, x), t, Loss::CrossEntropyLogistic) ==
          doctest::Approx(10.0 * std::log(2.0)).epsilon(1e-9));
}

TEST_CASE("perfect predictions give (clamped) zero loss and zero gradients") {
    const Network net =
        single_layer_net(2, 3, Activation::Logistic, Loss::CrossEntropyLogistic);
    const Matrix t = one_hot({0, 2}, 3);

    ForwardTrace trace = forward(net, Matrix(2, 2));
    trace.act.back() = t;  // exact hit
    CHECK(loss_value(trace, t, Loss::CrossEntropyLogistic) <= 1e-10);

    const BackwardResult grads = backward(net, trace, t);
    for (std::size_t li = 0; li < net.layer_count(); ++li) {
        for (std::size_t i = 0; i < grads.weight_grads[li].size(); ++i) {
            CHECK(std::abs(grads.weight_grads[li].data()[i]) < 1e-10);
        }
        for (double g : grads.bias_grads[li]) CHECK(std::abs(g) < 1e-10);
    }
    for (std::size_t i = 0; i < grads.input_grad.size(); ++i) {
        CHECK(std::abs(grads.input_grad.data()[i]) < 1e-10);
    }
}

TEST_CASE("loss rejects rows that are not one-hot") {
    const Network net =
        single_layer_net(2, 2, Activation::Logistic, Loss::CrossEntropyLogistic);
    const ForwardTrace trace = forward(net, Matrix(1, 2));
    CHECK_THROWS_AS(loss_value(trace, Matrix(1, 2, {0.5, 0.5}), Loss::CrossEntropyLogistic),
                    DataError);
    CHECK_THROWS_AS(loss_value(trace, Matrix(1, 2, {1.0, 1.0}), Loss::CrossEntropyLogistic),
                    DataError);
}

TEST_CASE("gradients match finite differences on a 5-8-4-3 tanh net") {
    const Network net = advprop::testing::random_test_net(
        {5, 8, 4, 3}, Activation::Tanh, Loss::CrossEntropyLogistic, 1234);
    Rng rng(8);
    const Matrix x = random_matrix(3, 5, rng);
    const Matrix t = one_hot({0, 2, 1}, 3);
    CHECK(max_gradient_rel_error(net, x, t) < 1e-5);
}

TEST_CASE("gradients match finite differences for every pairing") {
    const struct {
        Activation act;
        Loss loss;
        std::uint64_t seed;
    } cases[] = {
        {Activation::Logistic, Loss::CrossEntropyLogistic, 101},
        {Activation::Tanh, Loss::CrossEntropyLogistic, 102},
        {Activation::Relu, Loss::CrossEntropyLogistic, 103},
        {Activation::Logistic, Loss::CrossEntropySoftmax, 104},
        {Activation::Tanh, Loss::CrossEntropySoftmax, 105},
        {Activation::Relu, Loss::CrossEntropySoftmax, 106},
    };
    for (const auto& c : cases) {
        CAPTURE(to_string(c.act));
        CAPTURE(to_string(c.loss));
        const Network net =
            advprop::testing::random_test_net({4, 6, 5, 3}, c.act, c.loss, c.seed);
        Rng rng(c.seed + 1);
        const Matrix x = random_matrix(2, 4, rng);
        const Matrix t = one_hot({2, 0}, 3);
        CHECK(max_gradient_rel_error(net, x, t) < 1e-5);
    }
}

TEST_CASE("dropout masks are replayed in the backward pass") {
    // With dropout active, gradients must be exact for the masked network:
    // compare against finite differences of the same masked forward pass by
    // replaying the trace's masks manually through loss evaluation.
    const Network net = advprop::testing::random_test_net(
        {5, 6, 3}, Activation::Tanh, Loss::CrossEntropyLogistic, 55);
    Rng data_rng(9);
    const Matrix x = random_matrix(2, 5, data_rng);
    const Matrix t = one_hot({1, 2}, 3);
    Rng drop_rng(10);
    const ForwardTrace trace = forward(net, x, DropoutSpec{0.3, 0.4}, drop_rng);
    const BackwardResult grads = backward(net, trace, t);

    // Finite differences with the masks frozen: fold the input mask into x
    // and the hidden mask into the next layer's weights.
    const double h = 1e-5;
    auto masked_loss = [&](const Network& n, const Matrix& input) {
        Matrix z0 = trace.masks[0].empty() ? input : hadamard(input, trace.masks[0]);
        Matrix pre0 = matmul_nt(z0, n.layer(0).weights);
        for (std::size_t r = 0; r < pre0.rows(); ++r)
            for (std::size_t c = 0; c < pre0.cols(); ++c)
                pre0(r, c) += n.layer(0).biases[c];
        Matrix a0(pre0.rows(), pre0.cols());
        for (std::size_t i = 0; i < pre0.size(); ++i) a0.data()[i] = std::tanh(pre0.data()[i]);
        Matrix a0m = trace.masks[1].empty() ? a0 : hadamard(a0, trace.masks[1]);
        Matrix pre1 = matmul_nt(a0m, n.layer(1).weights);
        for (std::size_t r = 0; r < pre1.rows(); ++r)
            for (std::size_t c = 0; c < pre1.cols(); ++c)
                pre1(r, c) += n.layer(1).biases[c];
        Matrix y(pre1.rows(), pre1.cols());
        for (std::size_t i = 0; i < pre1.size(); ++i) {
            y.data()[i] = 1.0 / (1.0 + std::exp(-pre1.data()[i]));
        }
        ForwardTrace fake;
        fake.input = z0;
        fake.act.push_back(y);
        return loss_value(fake, t, Loss::CrossEntropyLogistic);
    };

    double worst = 0.0;
    for (std::size_t li = 0; li < 2; ++li) {
        for (std::size_t i = 0; i < net.layer(li).weights.size(); ++i) {
            Network plus = net;
            plus.layer(li).weights.data()[i] += h;
            Network minus = net;
            minus.layer(li).weights.data()[i] -= h;
            const double numeric = (masked_loss(plus, x) - masked_loss(minus, x)) / (2 * h);
            worst = std::max(
                worst, advprop::testing::rel_err(grads.weight_grads[li].data()[i], numeric));
        }
    }
    for (std::size_t i = 0; i < x.size(); ++i) {
        Matrix plus = x;
        plus.data()[i] += h;
        Matrix minus = x;
        minus.data()[i] -= h;
        const double numeric = (masked_loss(net, plus) - masked_loss(net, minus)) / (2 * h);
        worst =
            std::max(worst, advprop::testing::rel_err(grads.input_grad.data()[i], numeric));
    }
    CHECK(worst < 1e-5);
}

TEST_CASE("backward rejects a trace from a different network") {
    const Network net =
        init_network({4, 5, 3}, Activation::Tanh, Loss::CrossEntropyLogistic, 1);
    const Network other =
        init_network({4, 6, 3}, Activation::Tanh, Loss::CrossEntropyLogistic, 2);
    Rng rng(3);
    const Matrix x = random_matrix(2, 4, rng);
    const ForwardTrace trace = forward(other, x);
    CHECK_THROWS_AS(backward(net, trace, one_hot({0, 1}, 3)), InternalError);
}

TEST_CASE("pass counters track forward and backward executions") {
    const Network net =
        init_network({4, 5, 3}, Activation::Relu, Loss::CrossEntropyLogistic, 1);
    Rng rng(4);
    const Matrix x = random_matrix(2, 4, rng);
    const Matrix t = one_hot({0, 1}, 3);
    pass_counters::reset();
    const ForwardTrace trace = forward(net, x);
    CHECK(pass_counters::forwards() == 1);
    CHECK(pass_counters::backwards() == 0);
    backward(net, trace, t);
    CHECK(pass_counters::backwards() == 1);
}
