#include "dagfm/numcore/grad_check.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "dagfm/numcore/errors.hpp"

namespace dagfm {

namespace {

double checked_eval(const LossFunction& loss) {
  const double value = loss(nullptr);
  if (!std::isfinite(value)) throw EvaluationError("loss evaluated to a non-finite value during gradient check");
  return value;
}

}  // namespace

GradCheckResult grad_check(const LossFunction& loss, ParamStore& store, double h, const GradCheckOptions& options) {
  if (!(h > 0.0)) throw ConfigError("finite-difference step must be positive");
  Gradients analytic = store.zero_gradients();
  const double base = loss(&analytic);
  if (!std::isfinite(base)) throw EvaluationError("loss evaluated to a non-finite value during gradient check");

  std::mt19937_64 rng(options.seed);
  GradCheckResult result;
  for (std::size_t p = 0; p < store.size(); ++p) {
    ParamHandle handle{p};
    if (!store.trainable(handle)) continue;
    Tensor& value = store.value(handle);

    std::vector<std::size_t> coords(value.size());
    std::iota(coords.begin(), coords.end(), std::size_t{0});
    if (options.coords_per_param != 0 && coords.size() > options.coords_per_param) {
      for (std::size_t k = 0; k < options.coords_per_param; ++k) {
        std::size_t pick = k + static_cast<std::size_t>(rng() % (coords.size() - k));
        std::swap(coords[k], coords[pick]);
      }
      coords.resize(options.coords_per_param);
    }

    for (std::size_t k : coords) {
      const double saved = value[k];
      auto central = [&](double step) {
        value[k] = saved + step;
        const double plus = checked_eval(loss);
        value[k] = saved - step;
        const double minus = checked_eval(loss);
        value[k] = saved;
        return (plus - minus) / (2.0 * step);
      };
      const double coarse = central(h);
      double numeric = coarse;
      if (options.richardson) {
        const double fine = central(0.5 * h);
        numeric = (4.0 * fine - coarse) / 3.0;
        if (options.skip_nonsmooth) {
          const double finer = (4.0 * central(0.25 * h) - fine) / 3.0;
          if (std::abs(numeric - finer) > 1e-3 * std::abs(finer) + 1e-7) {
            ++result.coords_skipped;
            continue;
          }
        }
      }
      const double rel = std::abs(analytic[handle][k] - numeric) / (std::abs(numeric) + 1e-8);
      ++result.coords_checked;
      if (result.coords_checked == 1 || rel > result.max_relative_error) {
        result.max_relative_error = rel;
        result.worst_param = store.name(handle);
        result.worst_index = k;
        result.worst_analytic = analytic[handle][k];
        result.worst_numeric = numeric;
      }
    }
  }
  return result;
}

}  // namespace dagfm
