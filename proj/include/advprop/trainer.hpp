#pragma once

#include <functional>
#include <iosfwd>
#include <optional>

#include "advprop/adversarial.hpp"
#include "advprop/config.hpp"
#include "advprop/dataset.hpp"
#include "advprop/preprocess.hpp"

namespace advprop {

/// Fits the configured preprocessing pipeline on the training split.
/// Scale-to-[0,1] always comes first for the fitted kinds, matching how the
/// datasets are stored on disk (raw bytes).
FittedTransforms fit_pipeline(PreprocessKind kind, const Dataset& raw_train,
                              double zca_regularizer);

/// One pass over the shuffled training set, updating the network in place.
/// Returns the mean objective value over the epoch's learning passes.
double run_training_epoch(Network& net, const Dataset& train, std::size_t epoch,
                          const TrainConfig& train_cfg, const AdversarialSection& adv,
                          const DropoutSection& dropout, Rng* dropout_rng,
                          OptimState& state);

/// Invoked after every epoch with the epoch index (0-based), the current
/// network and the clean training error. Return false to stop training.
using EpochHook = std::function<bool(std::size_t, const Network&, double)>;

struct TrainOutcome {
    Network net;
    std::vector<double> train_err;
    std::vector<double> val_err;   // empty when no validation split
    std::vector<double> test_err;  // empty when no test set given
    std::vector<double> train_loss;
    std::vector<double> epoch_seconds;
    std::size_t epochs_run = 0;
    bool stopped_by_schedule = false;
};

/// Full training run: seeded init, per-epoch shuffled updates, clean-error
/// evaluation, optional plateau schedule. Writes one deterministic
/// key=value line per epoch to `metrics_log`; wall-clock timings go to
/// `timing_log` so the metrics stream stays byte-reproducible.
TrainOutcome train_model(const ExperimentConfig& cfg, const Dataset& train,
                         const Dataset* val, const Dataset* test,
                         std::ostream* metrics_log = nullptr,
                         std::ostream* timing_log = nullptr,
                         std::ostream* console = nullptr, const EpochHook& hook = {});

/// Mean wall-clock seconds per training epoch (updates only): one warmup
/// epoch followed by `timed_epochs` measured ones, on a fresh network.
double epoch_timing(const ExperimentConfig& cfg, const Dataset& train, RunMode mode,
                    std::size_t timed_epochs = 3);

}  // namespace advprop
