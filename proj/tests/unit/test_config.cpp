#include "doctest.h"

#include "advprop/config.hpp"
#include "advprop/errors.hpp"

using namespace advprop;

namespace {

const char* kSample = R"(# sample config
[network]
arch = 784,100,100,10
activation = relu
loss = ce_logistic

[train]
learning_rate = 0.05
batch_size = 10
epochs = 20
momentum = 0
weight_decay = 0
max_norm = none
seed = 7
lr_schedule = none

[adversarial]
epsilon = 0.08
mode = adversarial

[dropout]
enabled = false
input_rate = 0
hidden_rate = 0

[data]
dataset = mnist
preprocessing = scale01
validation_size = 0
zca_regularizer = 1e-5
dir = /data

[output]
dir = out
checkpoint_every = 0
)";

}  // namespace

TEST_CASE("a full config parses with every field populated") {
    const ExperimentConfig cfg = parse_config_text(kSample, "sample");
    CHECK(cfg.network.arch == std::vector<std::size_t>{784, 100, 100, 10});
    CHECK(cfg.network.activation == Activation::Relu);
    CHECK(cfg.network.loss == Loss::CrossEntropyLogistic);
    CHECK(cfg.train.learning_rate == 0.05);
    CHECK(cfg.train.batch_size == 10);
    CHECK(cfg.train.epochs == 20);
    CHECK_FALSE(cfg.train.max_norm.has_value());
    CHECK(cfg.train.seed == 7);
    CHECK(cfg.adversarial.epsilon == 0.08);
    CHECK(cfg.adversarial.mode == RunMode::Adversarial);
    CHECK(cfg.data.dataset == DatasetKind::Mnist);
    CHECK(cfg.data.dir == "/data");
    CHECK(cfg.output.dir == "out");
}

TEST_CASE("unknown keys and sections are rejected") {
    std::string text = kSample;
    text += "\n[network]\n";  // duplicate section is fine, duplicate keys are not
    CHECK_NOTHROW(parse_config_text(text, "t"));

    CHECK_THROWS_WITH_AS(parse_config_text(std::string(kSample) + "\n[wat]\nx = 1\n", "t"),
                         doctest::Contains("unknown section"), ConfigError);
    CHECK_THROWS_WITH_AS(
        parse_config_text(std::string(kSample) + "\n[train]\nlerning_rate = 1\n", "t"),
        doctest::Contains("unknown key"), ConfigError);
    CHECK_THROWS_WITH_AS(
        parse_config_text(std::string(kSample) + "\n[train]\nseed = 8\n", "t"),
        doctest::Contains("duplicate"), ConfigError);
}

TEST_CASE("invalid values name the offending field") {
    CHECK_THROWS_WITH_AS(
        parse_config_text("[train]\nlearning_rate = fast\n", "t"),
        doctest::Contains("train.learning_rate"), ConfigError);
    CHECK_THROWS_AS(parse_config_text("[network]\narch = 784\n", "t"), ConfigError);
    CHECK_THROWS_AS(parse_config_text("[network]\nactivation = step\n", "t"), ConfigError);
}

TEST_CASE("manifest text reparses to an equivalent config") {
    const ExperimentConfig cfg = parse_config_text(kSample, "sample");
    const std::string manifest = manifest_text(cfg);
    const ExperimentConfig again = parse_config_text(manifest, "manifest");
    CHECK(again.network.arch == cfg.network.arch);
    CHECK(again.train.learning_rate == cfg.train.learning_rate);
    CHECK(again.train.seed == cfg.train.seed);
    CHECK(again.adversarial.epsilon == cfg.adversarial.epsilon);
    CHECK(again.data.dir == cfg.data.dir);
    CHECK(again.output.dir == cfg.output.dir);
    CHECK(config_hash(again) == config_hash(cfg));
}

TEST_CASE("config hash ignores run-local locations but not hyperparameters") {
    ExperimentConfig a = parse_config_text(kSample, "sample");
    ExperimentConfig b = a;
    b.output.dir = "elsewhere";
    b.data.dir = "/other-data";
    CHECK(config_hash(a) == config_hash(b));

    ExperimentConfig c = a;
    c.adversarial.epsilon = 0.25;
    CHECK(config_hash(a) != config_hash(c));
    ExperimentConfig d = a;
    d.train.seed += 1;
    CHECK(config_hash(a) != config_hash(d));
}

TEST_CASE("the preset table covers the published experiment rows") {
    const std::vector<std::string> names = preset_names();
    CHECK(names.size() == 17);  // 9 MNIST + 4 CIFAR FC rows x 2 preprocessings

    const ExperimentConfig mnist = preset("mnist-relu-2x400");
    CHECK(mnist.network.arch == std::vector<std::size_t>{784, 400, 400, 10});
    CHECK(mnist.network.activation == Activation::Relu);
    CHECK(mnist.network.loss == Loss::CrossEntropyLogistic);
    CHECK(mnist.adversarial.epsilon == 0.08);
    CHECK(mnist.train.batch_size == 10);
    CHECK(mnist.train.learning_rate == 0.05);
    CHECK(mnist.train.epochs == 150);
    CHECK(mnist.train.momentum == 0.0);
    CHECK(mnist.train.weight_decay == 0.0);
    CHECK_FALSE(mnist.train.max_norm.has_value());
    CHECK(mnist.train.lr_schedule == LrSchedule::None);

    const ExperimentConfig logistic = preset("mnist-logistic-2x800");
    CHECK(logistic.train.learning_rate == 0.5);
    const ExperimentConfig tanh_cfg = preset("mnist-tanh-2x1200");
    CHECK(tanh_cfg.train.learning_rate == 0.01);
    CHECK(tanh_cfg.network.arch[1] == 1200);

    const ExperimentConfig cifar = preset("cifar-fc-2x3000-simple");
    CHECK(cifar.network.arch == std::vector<std::size_t>{3072, 3000, 3000, 10});
    CHECK(cifar.network.loss == Loss::CrossEntropySoftmax);
    CHECK(cifar.train.learning_rate == 0.1);
    CHECK(cifar.train.batch_size == 128);
    CHECK(cifar.train.max_norm == 4.0);
    CHECK(cifar.train.lr_schedule == LrSchedule::HalveOnPlateau);
    CHECK(cifar.adversarial.epsilon == 0.03);
    CHECK(cifar.data.preprocessing == PreprocessKind::Simple);

    const ExperimentConfig cifar_drop = preset("cifar-fc-2x3000-zca-dropout");
    CHECK(cifar_drop.dropout.enabled);
    CHECK(cifar_drop.dropout.input_rate == 0.1);
    CHECK(cifar_drop.dropout.hidden_rate == 0.5);
    CHECK(cifar_drop.data.preprocessing == PreprocessKind::Zca);

    const ExperimentConfig cifar_std = preset("cifar-fc-2x3000-simple-backprop");
    CHECK(cifar_std.adversarial.mode == RunMode::Standard);

    // Every preset validates.
    for (const std::string& name : names) CHECK_NOTHROW(preset(name).validate());

    CHECK_THROWS_WITH_AS(preset("mnist-relu-2x9000"), doctest::Contains("available"),
                         ConfigError);
}
