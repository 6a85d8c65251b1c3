#pragma once

#include <utility>
#include <vector>

#include "dagfm/interactions/model.hpp"
#include "dagfm/numcore/mlp.hpp"

namespace dagfm {

/// Second-order field-aware factorization machines with a field-wise linear term:
///   logit = sum_{i<j} sum_k phi(e_i, e_j)_k + sum_i <v_i, e_i> + b.
/// FwFM uses the weighted inner function (a vector per pair), FmFM the kernel
/// function (a d x d matrix per pair). Pairs are ordered (0,1), (0,2), ...
class PairwiseFmModel : public Model {
 public:
  PairwiseFmModel(ModelSpec spec, std::mt19937_64& rng);

  const std::vector<std::pair<std::size_t, std::size_t>>& pairs() const { return pairs_; }
  ParamHandle pair_weight() const { return pair_w_; }
  ParamHandle linear_weight() const { return linear_; }
  ParamHandle bias() const { return bias_; }

  double forward_embedded(std::span<const double> emb) const override;
  double backward_embedded(std::span<const double> emb, const LogitGradient& loss_grad, Gradients& grads,
                           std::span<double> grad_emb) const override;
  Counted counted_embedded(std::span<const Counted> emb) const override;

 private:
  template <class T>
  T run(std::span<const T> emb) const;

  std::vector<std::pair<std::size_t, std::size_t>> pairs_;
  ParamHandle pair_w_;
  ParamHandle linear_;
  ParamHandle bias_;
};

inline const std::vector<std::size_t> kTinyMlpHidden{128, 128, 128};

/// Plain MLP over the concatenated embeddings (hidden widths from the spec,
/// three layers of 128 when none are given).
class TinyMlpModel : public Model {
 public:
  TinyMlpModel(ModelSpec spec, std::mt19937_64& rng);

  const Mlp& mlp() const { return mlp_; }

  double forward_embedded(std::span<const double> emb) const override;
  double backward_embedded(std::span<const double> emb, const LogitGradient& loss_grad, Gradients& grads,
                           std::span<double> grad_emb) const override;
  Counted counted_embedded(std::span<const Counted> emb) const override;

 private:
  Mlp mlp_;
};

}  // namespace dagfm
