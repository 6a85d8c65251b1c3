#pragma once

#include <vector>

#include "dagfm/interactions/model.hpp"

namespace dagfm {

/// Compressed interaction network (the explicit part of xDeepFM).
///
/// Layer k maps the previous feature map X^{k-1} (H_{k-1} x d, X^0 = the
/// m x d embeddings) to X^k with
///   X^k_h = sum_i sum_j W^k[h, i, j] * (X^{k-1}_i ⊙ X^0_j).
/// Each layer is sum-pooled over d; the concatenated pools feed a linear head.
/// The Hadamard products Z_{ij} are formed once per layer and shared by all
/// H_k output rows.
class CinModel : public Model {
 public:
  CinModel(ModelSpec spec, std::mt19937_64& rng);

  const std::vector<std::size_t>& layer_sizes() const { return sizes_; }
  ParamHandle kernel(std::size_t layer) const { return kernels_.at(layer); }
  ParamHandle head_weight() const { return head_w_; }
  ParamHandle head_bias() const { return head_b_; }

  double forward_embedded(std::span<const double> emb) const override;
  double backward_embedded(std::span<const double> emb, const LogitGradient& loss_grad, Gradients& grads,
                           std::span<double> grad_emb) const override;
  Counted counted_embedded(std::span<const Counted> emb) const override;

  // Feature maps X^0..X^depth of one forward pass, each rows x d.
  std::vector<std::vector<double>> feature_maps(std::span<const double> emb) const;

 private:
  template <class T>
  struct Work;
  template <class T>
  T run(std::span<const T> emb, Work<T>& work) const;

  std::vector<std::size_t> sizes_;
  std::vector<ParamHandle> kernels_;
  ParamHandle head_w_;
  ParamHandle head_b_;
};

}  // namespace dagfm
