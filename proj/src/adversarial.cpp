#include "advprop/adversarial.hpp"

#include <cmath>

#include "advprop/errors.hpp"

namespace advprop {

void AdvConfig::validate() const {
    if (!(epsilon >= 0.0) || !std::isfinite(epsilon)) {
        throw ConfigError("epsilon must be finite and non-negative");
    }
}

Matrix fgsm_perturb(const Matrix& x, const Matrix& e, double epsilon) {
    if (x.rows() != e.rows() || x.cols() != e.cols()) {
        throw ShapeError("fgsm_perturb: input " + x.shape_str() + " vs gradient " +
                         e.shape_str());
    }
    if (!(epsilon >= 0.0) || !std::isfinite(epsilon)) {
        throw ConfigError("fgsm_perturb: epsilon must be finite and non-negative");
    }
    if (epsilon == 0.0) return x;

    Matrix z(x.rows(), x.cols());
    const double* px = x.data();
    const double* pe = e.data();
    double* pz = z.data();
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double g = pe[i];
        if (!std::isfinite(g)) {
            throw NumericError("fgsm_perturb: non-finite gradient entry at index " +
                               std::to_string(i));
        }
        const double s = g > 0.0 ? 1.0 : (g < 0.0 ? -1.0 : 0.0);
        pz[i] = px[i] + epsilon * s;
    }
    ensure_finite(z, "fgsm_perturb");
    return z;
}

BackwardResult adversarial_batch_grads(const Network& net, const Matrix& x,
                                       const Matrix& targets, const AdvConfig& cfg,
                                       const DropoutSpec* dropout, Rng* rng) {
    cfg.validate();
    const bool use_dropout = dropout != nullptr && rng != nullptr;

    ForwardTrace clean_trace =
        use_dropout ? forward(net, x, *dropout, *rng) : forward(net, x);
    BackwardResult clean = backward(net, clean_trace, targets);

    Matrix z = fgsm_perturb(x, clean.input_grad, cfg.epsilon);

    // Fresh masks for the learning pass.
    ForwardTrace adv_trace =
        use_dropout ? forward(net, z, *dropout, *rng) : forward(net, z);
    return backward(net, adv_trace, targets);
}

BackwardResult adversarial_gradient_delta(const Network& net, const Matrix& x,
                                          const Matrix& targets, double epsilon) {
    AdvConfig cfg{epsilon};
    BackwardResult adv = adversarial_batch_grads(net, x, targets, cfg);

    ForwardTrace trace = forward(net, x);
    BackwardResult std_grads = backward(net, trace, targets);

    BackwardResult delta;
    delta.weight_grads.reserve(adv.weight_grads.size());
    delta.bias_grads.reserve(adv.bias_grads.size());
    for (std::size_t li = 0; li < adv.weight_grads.size(); ++li) {
        delta.weight_grads.push_back(sub(adv.weight_grads[li], std_grads.weight_grads[li]));
        std::vector<double> bg(adv.bias_grads[li].size());
        for (std::size_t i = 0; i < bg.size(); ++i) {
            bg[i] = adv.bias_grads[li][i] - std_grads.bias_grads[li][i];
        }
        delta.bias_grads.push_back(std::move(bg));
    }
    delta.input_grad = sub(adv.input_grad, std_grads.input_grad);
    return delta;
}

}  // namespace advprop
