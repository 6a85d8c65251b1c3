#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <memory>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "dagfm/data/schema.hpp"
#include "dagfm/numcore/counted.hpp"
#include "dagfm/numcore/param_store.hpp"
#include "json.hpp"

namespace dagfm {

enum class ModelKind { dagfm, dagfm_plus, cin, crossnet, fwfm, fmfm, tiny_mlp };
enum class InteractionFn { basic_inner, inner, kernel, outer };
// Which DAG node states feed the DAGFM+ MLP tower.
enum class PlusStates { all_layers, last_layer };

std::string to_string(ModelKind kind);
std::string to_string(InteractionFn fn);
std::string to_string(PlusStates states);
ModelKind parse_model_kind(const std::string& text);
InteractionFn parse_interaction_fn(const std::string& text);
PlusStates parse_plus_states(const std::string& text);

/// Directed edge between fields `from` -> `to` (0-based, from <= to).
struct DagEdge {
  std::size_t from = 0;
  std::size_t to = 0;
  friend bool operator==(const DagEdge&, const DagEdge&) = default;
};

/// Fully resolved architecture of one model.
struct ModelSpec {
  ModelKind kind = ModelKind::dagfm;
  InteractionFn fn = InteractionFn::inner;
  // Embedding rows per field (vocabulary + OOV bucket); its length is m.
  std::vector<std::size_t> vocab_rows;
  std::size_t embed_dim = 16;
  // DAGFM propagation layers, CIN depth or CrossNet depth.
  std::size_t depth = 3;
  // CIN feature-map rows per layer; empty means `depth` layers of 200.
  std::vector<std::size_t> cin_layers;
  // Hidden widths of the DAGFM+ tower or the tiny MLP.
  std::vector<std::size_t> mlp_hidden;
  PlusStates plus_states = PlusStates::all_layers;
  // DAG edges removed for ablations; self-pairs cannot be removed.
  std::vector<DagEdge> removed_edges;

  std::size_t num_fields() const { return vocab_rows.size(); }
  // Resolved CIN layer sizes.
  std::vector<std::size_t> cin_sizes() const;
  void validate() const;

  nlohmann::json to_json() const;
  static ModelSpec from_json(const nlohmann::json& j);
  friend bool operator==(const ModelSpec&, const ModelSpec&) = default;
};

/// Per-field embedding matrices W_i of shape (rows_i x d), stored in the
/// owning model's ParamStore as `embedding.<i>`.
class EmbeddingTable {
 public:
  EmbeddingTable() = default;
  EmbeddingTable(ParamStore& store, const std::vector<std::size_t>& vocab_rows, std::size_t dim,
                 std::mt19937_64& rng);

  std::size_t num_fields() const { return handles_.size(); }
  std::size_t dim() const { return dim_; }
  ParamHandle handle(std::size_t field) const { return handles_.at(field); }
  const std::vector<ParamHandle>& handles() const { return handles_; }

  // m x d row-major lookup; throws LookupError on an out-of-range index.
  void gather(const ParamStore& store, std::span<const FieldIndex> row, std::span<double> out) const;
  void scatter_add(Gradients& grads, std::span<const FieldIndex> row, std::span<const double> grad) const;

 private:
  std::vector<ParamHandle> handles_;
  std::vector<std::size_t> rows_;
  std::size_t dim_ = 0;
};

/// Maps the model logit to d(loss)/d(logit).
using LogitGradient = std::function<double(double logit)>;

/// Base of every CTR model: embeddings plus an interaction component that maps
/// the m x d embedding matrix to a logit. Forward passes are const and
/// deterministic; all trainable state lives in `params()`.
class Model {
 public:
  virtual ~Model() = default;
  Model(const Model&) = delete;
  Model& operator=(const Model&) = delete;

  const ModelSpec& spec() const { return spec_; }
  ParamStore& params() { return params_; }
  const ParamStore& params() const { return params_; }
  const EmbeddingTable& embeddings() const { return embeddings_; }

  double logit(std::span<const FieldIndex> row) const;
  // Forward, then backward with upstream gradient `loss_grad(logit)`;
  // parameter gradients are accumulated into `grads`. Returns the logit.
  double logit_with_gradient(std::span<const FieldIndex> row, const LogitGradient& loss_grad, Gradients& grads) const;
  // Runs the forward pass with instrumented arithmetic.
  FlopCount counted_forward(std::span<const FieldIndex> row) const;

  // Same three entry points on a precomputed m x d embedding matrix.
  virtual double forward_embedded(std::span<const double> emb) const = 0;
  virtual double backward_embedded(std::span<const double> emb, const LogitGradient& loss_grad, Gradients& grads,
                                   std::span<double> grad_emb) const = 0;
  virtual Counted counted_embedded(std::span<const Counted> emb) const = 0;

 protected:
  Model(ModelSpec spec, std::mt19937_64& rng);

  ModelSpec spec_;
  ParamStore params_;
  EmbeddingTable embeddings_;
};

inline constexpr double kEmbeddingInitStd = 0.01;

}  // namespace dagfm
