#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include "dagfm/interactions/model.hpp"
#include "dagfm/numcore/mlp.hpp"

namespace dagfm {

/// Node states and pooled values of one DAGFM forward pass.
///
/// With l - 1 propagation layers there are l state layers; layer 0 holds the
/// embeddings. `states` is l x m x d, `pooled` is l x m and is also the
/// concatenated head input p = [p^1; ...; p^l].
struct PropagationTrace {
  std::size_t num_layers = 0;
  std::size_t num_fields = 0;
  std::size_t dim = 0;
  std::vector<double> states;
  std::vector<double> pooled;
  double logit = 0.0;

  std::span<const double> state(std::size_t layer, std::size_t field) const {
    return {states.data() + (layer * num_fields + field) * dim, dim};
  }
  double pooled_at(std::size_t layer, std::size_t field) const { return pooled[layer * num_fields + field]; }
};

/// Directed-acyclic-graph factorization machine.
///
/// Node i aggregates phi(h_j^t, h_i^1) over every enabled source j <= i
/// (self-pair included), so the full lower-triangular DAG reproduces the
/// suffix-set recurrence of arbitrary-order interactions. Edge weights per
/// layer are stored with one row per enabled pair in (target, source) order:
///   inner  `dagfm.layer<t>.w`          (pairs x d)
///   kernel `dagfm.layer<t>.W`          (pairs x d x d)
///   outer  `dagfm.layer<t>.p`, `.q`    (pairs x d)
/// The head `dagfm.head.weight` has m * (depth + 1) entries.
///
/// ModelKind::dagfm_plus adds an MLP tower over the node states whose output is
/// added to the explicit logit.
class DagfmModel : public Model {
 public:
  struct Source {
    std::size_t field;  // j
    std::size_t pair;   // row in the layer weight tensors
  };

  DagfmModel(ModelSpec spec, std::mt19937_64& rng);

  std::size_t num_layers() const { return spec_.depth; }
  std::size_t num_pairs() const { return num_pairs_; }
  const std::vector<Source>& sources(std::size_t target) const { return sources_.at(target); }
  // Row of pair (from -> to) in the layer weight tensors, if the edge is enabled.
  std::optional<std::size_t> pair_index(std::size_t from, std::size_t to) const;
  bool has_full_topology() const { return spec_.removed_edges.empty(); }

  ParamHandle edge_weight(std::size_t layer) const { return edge_a_.at(layer); }
  // Second outer-function tensor (q); only for InteractionFn::outer.
  ParamHandle edge_weight_q(std::size_t layer) const { return edge_b_.at(layer); }
  ParamHandle head_weight() const { return head_w_; }
  ParamHandle head_bias() const { return head_b_; }
  const Mlp& tower() const { return tower_; }

  // Sets edge weights to the values that make propagation equal the plain
  // suffix-set recurrence: inner -> ones, kernel -> identity. Outer has no
  // such point for d > 1 and is rejected.
  void set_identity_weights();

  // One propagation step: states of layer `layer` (m x d) and the initial
  // states (m x d) -> states of layer `layer + 1`.
  std::vector<double> propagate(std::span<const double> states, std::span<const double> initial,
                                std::size_t layer) const;

  PropagationTrace trace(std::span<const FieldIndex> row) const;
  PropagationTrace trace_embedded(std::span<const double> emb) const;

  double forward_embedded(std::span<const double> emb) const override;
  double backward_embedded(std::span<const double> emb, const LogitGradient& loss_grad, Gradients& grads,
                           std::span<double> grad_emb) const override;
  Counted counted_embedded(std::span<const Counted> emb) const override;

  // Width of the DAGFM+ tower input.
  std::size_t tower_input_width() const;

 private:
  template <class T>
  struct Work;
  template <class T>
  T run(std::span<const T> emb, Work<T>& work) const;

  std::vector<std::vector<Source>> sources_;
  std::size_t num_pairs_ = 0;
  std::vector<ParamHandle> edge_a_;
  std::vector<ParamHandle> edge_b_;
  ParamHandle head_w_;
  ParamHandle head_b_;
  Mlp tower_;
};

}  // namespace dagfm
