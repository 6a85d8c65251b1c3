#include "dagfm/numcore/mlp.hpp"

#include <cmath>

#include "dagfm/numcore/counted.hpp"
#include "dagfm/numcore/errors.hpp"

namespace dagfm {

Mlp::Mlp(ParamStore& store, const std::string& prefix, std::size_t input_width, const std::vector<std::size_t>& hidden,
         std::size_t output_width, std::mt19937_64& rng) {
  if (input_width == 0 || output_width == 0) throw ConfigError("MLP widths must be positive");
  widths_.push_back(input_width);
  for (std::size_t w : hidden) {
    if (w == 0) throw ConfigError("MLP hidden widths must be positive");
    widths_.push_back(w);
  }
  widths_.push_back(output_width);

  for (std::size_t k = 0; k + 1 < widths_.size(); ++k) {
    const std::size_t in = widths_[k];
    const std::size_t out = widths_[k + 1];
    // Xavier-normal weights, zero bias.
    std::normal_distribution<double> dist(0.0, std::sqrt(2.0 / static_cast<double>(in + out)));
    Tensor weight({out, in});
    for (double& w : weight.data()) w = dist(rng);
    const std::string base = prefix + "." + std::to_string(k);
    weights_.push_back(store.add(base + ".weight", std::move(weight)));
    biases_.push_back(store.add(base + ".bias", Tensor({out})));
  }
}

template <class T>
void Mlp::forward(const ParamStore& store, std::span<const T> input, MlpTrace<T>& trace) const {
  if (input.size() != input_width()) {
    throw ShapeError("MLP expects input width " + std::to_string(input_width()) + ", got " +
                     std::to_string(input.size()));
  }
  trace.layers.resize(widths_.size());
  trace.layers[0].assign(input.begin(), input.end());
  const std::size_t last = widths_.size() - 2;
  for (std::size_t k = 0; k + 1 < widths_.size(); ++k) {
    const std::size_t in = widths_[k];
    const std::size_t out = widths_[k + 1];
    const double* w = store.value(weights_[k]).ptr();
    const double* b = store.value(biases_[k]).ptr();
    const std::vector<T>& x = trace.layers[k];
    std::vector<T>& y = trace.layers[k + 1];
    y.resize(out);
    for (std::size_t o = 0; o < out; ++o) {
      const double* row = w + o * in;
      T acc = x[0] * T(row[0]);
      for (std::size_t i = 1; i < in; ++i) acc += x[i] * T(row[i]);
      acc = acc + T(b[o]);
      if (k != last && !(acc > T(0.0))) acc = T(0.0);
      y[o] = acc;
    }
  }
}

void Mlp::backward(const ParamStore& store, const MlpTrace<double>& trace, std::span<const double> grad_output,
                   Gradients& grads, std::span<double> grad_input) const {
  std::vector<double> upstream(grad_output.begin(), grad_output.end());
  const std::size_t last = widths_.size() - 2;
  for (std::size_t k = widths_.size() - 1; k-- > 0;) {
    const std::size_t in = widths_[k];
    const std::size_t out = widths_[k + 1];
    const std::vector<double>& x = trace.layers[k];
    const std::vector<double>& y = trace.layers[k + 1];
    if (k != last) {
      // ReLU gate: the stored activation is zero exactly where the unit was off.
      for (std::size_t o = 0; o < out; ++o) {
        if (!(y[o] > 0.0)) upstream[o] = 0.0;
      }
    }
    const double* w = store.value(weights_[k]).ptr();
    double* gw = grads.ptr(weights_[k]);
    double* gb = grads.ptr(biases_[k]);
    std::vector<double> below(in, 0.0);
    for (std::size_t o = 0; o < out; ++o) {
      const double g = upstream[o];
      if (g == 0.0) continue;
      gb[o] += g;
      const double* row = w + o * in;
      double* grow = gw + o * in;
      for (std::size_t i = 0; i < in; ++i) {
        grow[i] += g * x[i];
        below[i] += g * row[i];
      }
    }
    upstream = std::move(below);
  }
  for (std::size_t i = 0; i < grad_input.size(); ++i) grad_input[i] += upstream[i];
}

template void Mlp::forward<double>(const ParamStore&, std::span<const double>, MlpTrace<double>&) const;
template void Mlp::forward<Counted>(const ParamStore&, std::span<const Counted>, MlpTrace<Counted>&) const;

}  // namespace dagfm
