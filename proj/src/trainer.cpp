#include "advprop/trainer.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <ostream>

#include "advprop/errors.hpp"
#include "advprop/metrics.hpp"

namespace advprop {

namespace {

// Distinct stream tag so dropout draws never overlap the init stream.
constexpr std::uint64_t kDropoutStream = 0x64726f70u;

double clean_error(const Network& net, const Dataset& ds) {
    const std::vector<int> predicted = predict(net, ds.inputs);
    std::size_t wrong = 0;
    for (std::size_t i = 0; i < predicted.size(); ++i) wrong += predicted[i] != ds.labels[i];
    return ds.size() ? static_cast<double>(wrong) / static_cast<double>(ds.size()) : 0.0;
}

std::string fmt(double v, const char* spec = "%.6f") {
    char buf[64];
    std::snprintf(buf, sizeof(buf), spec, v);
    return buf;
}

}  // namespace

FittedTransforms fit_pipeline(PreprocessKind kind, const Dataset& raw_train,
                              double zca_regularizer) {
    FittedTransforms pipeline;
    if (kind == PreprocessKind::None) return pipeline;
    pipeline.steps.emplace_back(Scale01Transform{});
    if (kind == PreprocessKind::Scale01) return pipeline;

    Dataset scaled = scale_01(raw_train);  // fit on the scaled training inputs
    switch (kind) {
        case PreprocessKind::Simple:
            pipeline.steps.emplace_back(fit_simple_norm(scaled.inputs));
            break;
        case PreprocessKind::PerFeature:
            pipeline.steps.emplace_back(fit_per_feature_norm(scaled.inputs));
            break;
        case PreprocessKind::Zca:
            pipeline.steps.emplace_back(zca_fit(scaled.inputs, zca_regularizer));
            break;
        default:
            break;
    }
    return pipeline;
}

double run_training_epoch(Network& net, const Dataset& train, std::size_t epoch,
                          const TrainConfig& train_cfg, const AdversarialSection& adv,
                          const DropoutSection& dropout, Rng* dropout_rng,
                          OptimState& state) {
    const EpochBatches batches =
        epoch_batches(train, train_cfg.batch_size, train_cfg.seed, epoch);
    const DropoutSpec spec{dropout.input_rate, dropout.hidden_rate};
    const bool use_dropout = dropout.enabled && dropout_rng != nullptr;
    const AdvConfig adv_cfg{adv.epsilon};

    double loss_sum = 0.0;
    for (std::size_t b = 0; b < batches.size(); ++b) {
        const Batch batch = batches.at(b);
        if (adv.mode == RunMode::Adversarial) {
            // Two forward/backward passes: the first only supplies the
            // input gradient for the perturbation.
            ForwardTrace probe = use_dropout ? forward(net, batch.x, spec, *dropout_rng)
                                             : forward(net, batch.x);
            BackwardResult probe_grads = backward(net, probe, batch.t);
            const Matrix z = fgsm_perturb(batch.x, probe_grads.input_grad, adv_cfg.epsilon);
            ForwardTrace learn = use_dropout ? forward(net, z, spec, *dropout_rng)
                                             : forward(net, z);
            loss_sum += loss_value(learn, batch.t, net.loss());
            BackwardResult grads = backward(net, learn, batch.t);
            sgd_update(net, grads, state, train_cfg);
        } else {
            ForwardTrace trace = use_dropout ? forward(net, batch.x, spec, *dropout_rng)
                                             : forward(net, batch.x);
            loss_sum += loss_value(trace, batch.t, net.loss());
            BackwardResult grads = backward(net, trace, batch.t);
            sgd_update(net, grads, state, train_cfg);
        }
    }
    return batches.size() ? loss_sum / static_cast<double>(batches.size()) : 0.0;
}

TrainOutcome train_model(const ExperimentConfig& cfg, const Dataset& train,
                         const Dataset* val, const Dataset* test,
                         std::ostream* metrics_log, std::ostream* timing_log,
                         std::ostream* console, const EpochHook& hook) {
    cfg.validate();
    cfg.train.validate();
    AdvConfig{cfg.adversarial.epsilon}.validate();

    TrainOutcome outcome;
    outcome.net = init_network(cfg.network.arch, cfg.network.activation, cfg.network.loss,
                               cfg.train.seed);
    OptimState state = make_optim_state(outcome.net, cfg.train);
    Rng dropout_rng(mix64(cfg.train.seed) ^ kDropoutStream);
    Rng* drop_rng = cfg.dropout.enabled ? &dropout_rng : nullptr;

    for (std::size_t epoch = 0; epoch < cfg.train.epochs; ++epoch) {
        const auto t0 = std::chrono::steady_clock::now();
        const double mean_loss = run_training_epoch(outcome.net, train, epoch, cfg.train,
                                                    cfg.adversarial, cfg.dropout, drop_rng,
                                                    state);
        const double seconds =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

        const double tr_err = clean_error(outcome.net, train);
        outcome.train_err.push_back(tr_err);
        outcome.train_loss.push_back(mean_loss);
        outcome.epoch_seconds.push_back(seconds);
        double v_err = -1.0, te_err = -1.0;
        if (val && val->size() > 0) {
            v_err = clean_error(outcome.net, *val);
            outcome.val_err.push_back(v_err);
        }
        if (test && test->size() > 0) {
            te_err = clean_error(outcome.net, *test);
            outcome.test_err.push_back(te_err);
        }
        outcome.epochs_run = epoch + 1;

        if (metrics_log) {
            (*metrics_log) << "epoch=" << epoch + 1 << " train_err=" << fmt(tr_err)
                           << " val_err=" << (v_err >= 0 ? fmt(v_err) : std::string("na"))
                           << " test_err=" << (te_err >= 0 ? fmt(te_err) : std::string("na"))
                           << " train_loss=" << fmt(mean_loss, "%.9e")
                           << " lr=" << fmt(state.current_lr, "%.9g") << "\n";
        }
        if (timing_log) {
            (*timing_log) << "epoch=" << epoch + 1 << " seconds=" << fmt(seconds, "%.3f")
                          << "\n";
        }
        if (console) {
            (*console) << "[epoch " << epoch + 1 << "/" << cfg.train.epochs
                       << "] train_err=" << fmt(tr_err, "%.4f")
                       << (v_err >= 0 ? " val_err=" + fmt(v_err, "%.4f") : "")
                       << (te_err >= 0 ? " test_err=" + fmt(te_err, "%.4f") : "") << " ("
                       << fmt(seconds, "%.1f") << "s)\n";
        }

        if (hook && !hook(epoch, outcome.net, tr_err)) break;

        if (cfg.train.lr_schedule == LrSchedule::HalveOnPlateau) {
            if (lr_schedule_step(state, tr_err, cfg.train) == ScheduleDecision::Stop) {
                outcome.stopped_by_schedule = true;
                break;
            }
        }
    }
    return outcome;
}

double epoch_timing(const ExperimentConfig& cfg, const Dataset& train, RunMode mode,
                    std::size_t timed_epochs) {
    if (timed_epochs < 3) timed_epochs = 3;
    cfg.validate();

    Network net = init_network(cfg.network.arch, cfg.network.activation, cfg.network.loss,
                               cfg.train.seed);
    OptimState state = make_optim_state(net, cfg.train);
    Rng dropout_rng(mix64(cfg.train.seed) ^ kDropoutStream);
    Rng* drop_rng = cfg.dropout.enabled ? &dropout_rng : nullptr;

    AdversarialSection adv = cfg.adversarial;
    adv.mode = mode;

    // Warmup epoch, then the measured ones.
    run_training_epoch(net, train, 0, cfg.train, adv, cfg.dropout, drop_rng, state);
    double total = 0.0;
    for (std::size_t e = 0; e < timed_epochs; ++e) {
        const auto t0 = std::chrono::steady_clock::now();
        run_training_epoch(net, train, e + 1, cfg.train, adv, cfg.dropout, drop_rng, state);
        total +=
            std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    }
    return total / static_cast<double>(timed_epochs);
}

}  // namespace advprop
