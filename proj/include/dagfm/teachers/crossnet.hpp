#pragma once

#include "dagfm/interactions/model.hpp"

namespace dagfm {

/// Cross network with full md x md matrices (the DCNV2 parameterization):
///   x_{t+1} = x_0 ⊙ (W_t x_t + b_t) + x_t,   logit = v · x_L + c,
/// where x_0 is the flattened embedding matrix.
class CrossNetModel : public Model {
 public:
  CrossNetModel(ModelSpec spec, std::mt19937_64& rng);

  std::size_t width() const { return spec_.num_fields() * spec_.embed_dim; }
  ParamHandle weight(std::size_t layer) const { return weights_.at(layer); }
  ParamHandle bias(std::size_t layer) const { return biases_.at(layer); }
  ParamHandle head_weight() const { return head_w_; }
  ParamHandle head_bias() const { return head_b_; }

  // x_L for the given x_0.
  std::vector<double> cross(std::span<const double> x0) const;

  double forward_embedded(std::span<const double> emb) const override;
  double backward_embedded(std::span<const double> emb, const LogitGradient& loss_grad, Gradients& grads,
                           std::span<double> grad_emb) const override;
  Counted counted_embedded(std::span<const Counted> emb) const override;

 private:
  template <class T>
  struct Work;
  template <class T>
  T run(std::span<const T> emb, Work<T>& work) const;

  std::vector<ParamHandle> weights_;
  std::vector<ParamHandle> biases_;
  ParamHandle head_w_;
  ParamHandle head_b_;
};

}  // namespace dagfm
