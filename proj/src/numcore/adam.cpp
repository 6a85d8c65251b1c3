#include "dagfm/numcore/adam.hpp"

#include <cmath>

#include "dagfm/numcore/errors.hpp"

namespace dagfm {

void adam_step(ParamStore& store, const Gradients& grads, double lr, const AdamConfig& config) {
  if (!(lr >= 0.0) || !std::isfinite(lr)) throw ConfigError("learning rate must be a finite non-negative number");
  if (grads.size() != store.size()) {
    throw ConfigError("gradient count " + std::to_string(grads.size()) + " does not match parameter count " +
                      std::to_string(store.size()));
  }
  // Validate everything first so a failure leaves the store untouched.
  for (std::size_t i = 0; i < store.size(); ++i) {
    ParamHandle h{i};
    if (!store.trainable(h)) continue;
    const Tensor& g = grads[h];
    if (g.shape() != store.value(h).shape()) {
      throw ConfigError("gradient for '" + store.name(h) + "' has shape " + shape_to_string(g.shape()) +
                        ", parameter has " + shape_to_string(store.value(h).shape()));
    }
    if (!g.all_finite()) throw DivergenceError("non-finite gradient for parameter '" + store.name(h) + "'");
  }

  for (std::size_t i = 0; i < store.size(); ++i) {
    ParamHandle h{i};
    if (!store.trainable(h)) continue;
    AdamState& state = store.adam(h);
    state.step += 1;
    const double correction1 = 1.0 - std::pow(config.beta1, static_cast<double>(state.step));
    const double correction2 = 1.0 - std::pow(config.beta2, static_cast<double>(state.step));
    const double* g = grads[h].ptr();
    double* m = state.first_moment.ptr();
    double* v = state.second_moment.ptr();
    double* w = store.value(h).ptr();
    const std::size_t n = store.value(h).size();
    for (std::size_t k = 0; k < n; ++k) {
      m[k] = config.beta1 * m[k] + (1.0 - config.beta1) * g[k];
      v[k] = config.beta2 * v[k] + (1.0 - config.beta2) * g[k] * g[k];
      const double m_hat = m[k] / correction1;
      const double v_hat = v[k] / correction2;
      w[k] -= lr * m_hat / (std::sqrt(v_hat) + config.epsilon);
    }
  }
}

void add_l2_penalty(const ParamStore& store, Gradients& grads, double weight) {
  if (weight == 0.0) return;
  for (std::size_t i = 0; i < store.size(); ++i) {
    ParamHandle h{i};
    if (!store.trainable(h)) continue;
    const double* w = store.value(h).ptr();
    double* g = grads.ptr(h);
    const std::size_t n = store.value(h).size();
    for (std::size_t k = 0; k < n; ++k) g[k] += weight * w[k];
  }
}

}  // namespace dagfm
