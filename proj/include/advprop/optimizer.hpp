#pragma once

#include <cstdint>
#include <limits>
#include <optional>

#include "advprop/network.hpp"

namespace advprop {

enum class LrSchedule { None, HalveOnPlateau };

struct TrainConfig {
    double learning_rate = 0.0;
    std::size_t batch_size = 0;
    std::size_t epochs = 0;
    double momentum = 0.0;      // classical momentum, in [0, 1)
    double weight_decay = 0.0;  // additive L2 term; biases exempt
    std::optional<double> max_norm;  // per-row cap on incoming weights
    std::uint64_t seed = 0;
    LrSchedule lr_schedule = LrSchedule::None;

    // HalveOnPlateau protocol constants (patience is one epoch: any epoch
    // that fails to set a new best training error halves the rate).
    static constexpr double kPlateauFactor = 0.5;
    static constexpr std::size_t kMaxHalvings = 8;
    static constexpr double kTrainErrFloor = 0.0001;
    static constexpr std::size_t kScheduleMaxEpochs = 300;

    void validate() const;
};

struct OptimState {
    std::vector<Matrix> weight_velocity;
    std::vector<std::vector<double>> bias_velocity;
    double current_lr = 0.0;
    std::size_t halvings_done = 0;
    double best_train_err = std::numeric_limits<double>::infinity();
    std::size_t epochs_seen = 0;
};

OptimState make_optim_state(const Network& net, const TrainConfig& cfg);

/// v <- momentum*v - lr*(g + weight_decay*w); w <- w + v. Expects grads
/// that are already batch means. After the step, any weight-matrix row
/// whose L2 norm exceeds max_norm is rescaled to that norm exactly;
/// biases see neither weight decay nor the norm cap.
void sgd_update(Network& net, const BackwardResult& grads, OptimState& state,
                const TrainConfig& cfg);

enum class ScheduleDecision { Continue, Stop };

/// Called once per completed epoch when lr_schedule is HalveOnPlateau.
/// Halves the rate whenever the epoch fails to improve on the best
/// training error so far; stops after kMaxHalvings halvings, when the
/// error reaches kTrainErrFloor, or at kScheduleMaxEpochs epochs.
ScheduleDecision lr_schedule_step(OptimState& state, double epoch_train_err,
                                  const TrainConfig& cfg);

}  // namespace advprop
