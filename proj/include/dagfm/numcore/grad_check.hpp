#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <string>

#include "dagfm/numcore/param_store.hpp"

namespace dagfm {

/// Scalar loss over the parameters held in a ParamStore. When `grads` is
/// non-null the function must also accumulate the analytic gradient into it.
using LossFunction = std::function<double(Gradients* grads)>;

struct GradCheckOptions {
  // Coordinates sampled per trainable parameter tensor; 0 means all of them.
  std::size_t coords_per_param = 8;
  std::uint64_t seed = 0;
  // Combine steps h and h/2 as (4 D(h/2) - D(h)) / 3, cancelling the h² error
  // term so a larger h (less rounding noise) can be used.
  bool richardson = false;
  // With richardson: also extrapolate from (h/2, h/4). A coordinate where the
  // two extrapolations disagree by more than 1e-3 |R| + 1e-7 has a kink (ReLU)
  // inside the step, where finite differences say nothing about the
  // derivative. Such coordinates are counted in coords_skipped, not compared.
  bool skip_nonsmooth = false;
};

struct GradCheckResult {
  double max_relative_error = 0.0;
  std::string worst_param;
  std::size_t worst_index = 0;
  double worst_analytic = 0.0;
  double worst_numeric = 0.0;
  std::size_t coords_checked = 0;
  std::size_t coords_skipped = 0;
};

// Compares the analytic gradient against central differences with step `h`.
// Relative error per coordinate is |analytic - numeric| / (|numeric| + 1e-8).
GradCheckResult grad_check(const LossFunction& loss, ParamStore& store, double h,
                           const GradCheckOptions& options = {});

}  // namespace dagfm
