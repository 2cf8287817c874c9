#pragma once

#include "advprop/matrix.hpp"
#include "advprop/network.hpp"

namespace advprop {

struct AdvConfig {
    double epsilon = 0.0;  // perturbation magnitude, in input units

    void validate() const;
};

/// z = x + epsilon * sign(e). With epsilon == 0 the input is returned
/// unchanged, bit for bit. z is not clipped to any input range.
Matrix fgsm_perturb(const Matrix& x, const Matrix& e, double epsilon);

/// One adversarial mini-batch gradient evaluation:
///   1. forward x, 2. backward to the input layer, 3. perturb with the
///   input gradient's sign, 4. forward/backward on the perturbed batch.
/// Returns the second pass's gradients; the first pass contributes only
/// its input gradient. When dropout is active, each of the two passes
/// draws its own independent masks. Counts as exactly two forward and two
/// backward passes regardless of epsilon.
BackwardResult adversarial_batch_grads(const Network& net, const Matrix& x,
                                       const Matrix& targets, const AdvConfig& cfg,
                                       const DropoutSpec* dropout = nullptr,
                                       Rng* rng = nullptr);

/// Diagnostic only: the parameter-gradient difference between the
/// perturbed-input objective and the clean objective, computed with
/// dropout disabled. Exactly zero when epsilon is zero or the input
/// gradient vanishes.
BackwardResult adversarial_gradient_delta(const Network& net, const Matrix& x,
                                          const Matrix& targets, double epsilon);

}  // namespace advprop
