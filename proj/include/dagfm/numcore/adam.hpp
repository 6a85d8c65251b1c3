#pragma once

#include "dagfm/numcore/param_store.hpp"

namespace dagfm {

struct AdamConfig {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

// Bias-corrected Adam update of every trainable parameter. Frozen parameters
// and their optimizer state are left untouched.
void adam_step(ParamStore& store, const Gradients& grads, double lr, const AdamConfig& config = {});

// Adds `weight * value` to the gradient of every trainable parameter.
void add_l2_penalty(const ParamStore& store, Gradients& grads, double weight);

}  // namespace dagfm
