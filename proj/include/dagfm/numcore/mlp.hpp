#pragma once

#include <cstddef>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "dagfm/numcore/param_store.hpp"

namespace dagfm {

/// Activations recorded by an MLP forward pass: `layers[0]` is the input,
/// `layers[k]` the output of dense layer k (after ReLU for hidden layers).
template <class T>
struct MlpTrace {
  std::vector<std::vector<T>> layers;
  std::span<const T> output() const { return layers.back(); }
};

/// Stack of fully connected layers: ReLU after every hidden layer, linear
/// output layer. Parameters live in the owning model's ParamStore under
/// `<prefix>.<k>.weight` (out x in) and `<prefix>.<k>.bias` (out).
class Mlp {
 public:
  Mlp() = default;
  Mlp(ParamStore& store, const std::string& prefix, std::size_t input_width, const std::vector<std::size_t>& hidden,
      std::size_t output_width, std::mt19937_64& rng);

  std::size_t input_width() const { return widths_.empty() ? 0 : widths_.front(); }
  std::size_t output_width() const { return widths_.empty() ? 0 : widths_.back(); }
  const std::vector<std::size_t>& widths() const { return widths_; }
  bool empty() const { return widths_.empty(); }

  template <class T>
  void forward(const ParamStore& store, std::span<const T> input, MlpTrace<T>& trace) const;

  // Accumulates parameter gradients and writes d(loss)/d(input) into
  // `grad_input` (added, not assigned).
  void backward(const ParamStore& store, const MlpTrace<double>& trace, std::span<const double> grad_output,
                Gradients& grads, std::span<double> grad_input) const;

 private:
  std::vector<std::size_t> widths_;
  std::vector<ParamHandle> weights_;
  std::vector<ParamHandle> biases_;
};

}  // namespace dagfm
