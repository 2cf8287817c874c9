#include "advprop/optimizer.hpp"

#include <cmath>

#include "advprop/errors.hpp"

namespace advprop {

void TrainConfig::validate() const {
    if (!(learning_rate > 0.0) || !std::isfinite(learning_rate)) {
        throw ConfigError("learning_rate must be positive");
    }
    if (batch_size < 1) throw ConfigError("batch_size must be at least 1");
    if (momentum < 0.0 || momentum >= 1.0) throw ConfigError("momentum must lie in [0, 1)");
    if (weight_decay < 0.0 || !std::isfinite(weight_decay)) {
        throw ConfigError("weight_decay must be non-negative");
    }
    if (max_norm && !(*max_norm > 0.0)) throw ConfigError("max_norm must be positive");
}

OptimState make_optim_state(const Network& net, const TrainConfig& cfg) {
    cfg.validate();
    OptimState state;
    state.weight_velocity.reserve(net.layer_count());
    state.bias_velocity.reserve(net.layer_count());
    for (std::size_t li = 0; li < net.layer_count(); ++li) {
        const DenseLayer& l = net.layer(li);
        state.weight_velocity.emplace_back(l.weights.rows(), l.weights.cols());
        state.bias_velocity.emplace_back(l.biases.size(), 0.0);
    }
    state.current_lr = cfg.learning_rate;
    return state;
}

void sgd_update(Network& net, const BackwardResult& grads, OptimState& state,
                const TrainConfig& cfg) {
    if (grads.weight_grads.size() != net.layer_count() ||
        state.weight_velocity.size() != net.layer_count()) {
        throw InternalError("sgd_update: gradient/velocity layer count mismatch");
    }
    const double lr = state.current_lr;
    const double mu = cfg.momentum;
    const double lambda = cfg.weight_decay;

    for (std::size_t li = 0; li < net.layer_count(); ++li) {
        DenseLayer& layer = net.layer(li);
        const Matrix& gw = grads.weight_grads[li];
        Matrix& vw = state.weight_velocity[li];
        if (gw.rows() != layer.weights.rows() || gw.cols() != layer.weights.cols()) {
            throw InternalError("sgd_update: weight gradient shape mismatch at layer " +
                                std::to_string(li));
        }
        double* w = layer.weights.data();
        double* v = vw.data();
        const double* g = gw.data();
        const std::size_t nw = layer.weights.size();
        for (std::size_t i = 0; i < nw; ++i) {
            v[i] = mu * v[i] - lr * (g[i] + lambda * w[i]);
            w[i] += v[i];
        }

        const std::vector<double>& gb = grads.bias_grads[li];
        std::vector<double>& vb = state.bias_velocity[li];
        if (gb.size() != layer.biases.size()) {
            throw InternalError("sgd_update: bias gradient shape mismatch at layer " +
                                std::to_string(li));
        }
        for (std::size_t i = 0; i < gb.size(); ++i) {
            vb[i] = mu * vb[i] - lr * gb[i];
            layer.biases[i] += vb[i];
        }

        if (cfg.max_norm) {
            const double cap = *cfg.max_norm;
            for (std::size_t r = 0; r < layer.weights.rows(); ++r) {
                double* row = layer.weights.row(r);
                double sq = 0.0;
                for (std::size_t c = 0; c < layer.weights.cols(); ++c) sq += row[c] * row[c];
                const double norm = std::sqrt(sq);
                if (norm > cap) {
                    const double f = cap / norm;
                    for (std::size_t c = 0; c < layer.weights.cols(); ++c) row[c] *= f;
                }
            }
        }
    }
}

ScheduleDecision lr_schedule_step(OptimState& state, double epoch_train_err,
                                  const TrainConfig& cfg) {
    (void)cfg;
    if (epoch_train_err < 0.0 || !std::isfinite(epoch_train_err)) {
        throw DataError("lr_schedule_step: error rate must be a finite non-negative value");
    }
    state.epochs_seen += 1;
    if (epoch_train_err < state.best_train_err) {
        state.best_train_err = epoch_train_err;
    } else {
        state.current_lr *= TrainConfig::kPlateauFactor;
        state.halvings_done += 1;
    }
    if (state.halvings_done >= TrainConfig::kMaxHalvings) return ScheduleDecision::Stop;
    if (epoch_train_err <= TrainConfig::kTrainErrFloor) return ScheduleDecision::Stop;
    if (state.epochs_seen >= TrainConfig::kScheduleMaxEpochs) return ScheduleDecision::Stop;
    return ScheduleDecision::Continue;
}

}  // namespace advprop
