#include "dagfm/interactions/model.hpp"

#include <algorithm>

#include "dagfm/numcore/errors.hpp"

namespace dagfm {

namespace {

template <class Enum, std::size_t N>
Enum parse_enum(const std::string& text, const std::pair<Enum, const char*> (&table)[N], const char* what) {
  for (const auto& [value, name] : table) {
    if (text == name) return value;
  }
  std::string options;
  for (const auto& [value, name] : table) options += std::string(options.empty() ? "" : ", ") + name;
  throw ConfigError(std::string("unknown ") + what + " '" + text + "' (expected one of: " + options + ")");
}

template <class Enum, std::size_t N>
std::string enum_name(Enum value, const std::pair<Enum, const char*> (&table)[N]) {
  for (const auto& [v, name] : table) {
    if (v == value) return name;
  }
  return "?";
}

constexpr std::pair<ModelKind, const char*> kKinds[] = {
    {ModelKind::dagfm, "dagfm"},       {ModelKind::dagfm_plus, "dagfm_plus"}, {ModelKind::cin, "cin"},
    {ModelKind::crossnet, "crossnet"}, {ModelKind::fwfm, "fwfm"},             {ModelKind::fmfm, "fmfm"},
    {ModelKind::tiny_mlp, "tiny_mlp"},
};
constexpr std::pair<InteractionFn, const char*> kFns[] = {
    {InteractionFn::basic_inner, "basic-inner"},
    {InteractionFn::inner, "inner"},
    {InteractionFn::kernel, "kernel"},
    {InteractionFn::outer, "outer"},
};
constexpr std::pair<PlusStates, const char*> kPlusStates[] = {
    {PlusStates::all_layers, "all"},
    {PlusStates::last_layer, "last"},
};

}  // namespace

std::string to_string(ModelKind kind) { return enum_name(kind, kKinds); }
std::string to_string(InteractionFn fn) { return enum_name(fn, kFns); }
std::string to_string(PlusStates states) { return enum_name(states, kPlusStates); }
ModelKind parse_model_kind(const std::string& text) { return parse_enum(text, kKinds, "model kind"); }
InteractionFn parse_interaction_fn(const std::string& text) {
  return parse_enum(text, kFns, "interaction function");
}
PlusStates parse_plus_states(const std::string& text) { return parse_enum(text, kPlusStates, "plus_states"); }

std::vector<std::size_t> ModelSpec::cin_sizes() const {
  if (!cin_layers.empty()) return cin_layers;
  return std::vector<std::size_t>(depth, 200);
}

void ModelSpec::validate() const {
  if (num_fields() < 2) throw ConfigError("a model needs at least two feature fields");
  if (embed_dim == 0) throw ConfigError("embedding size must be at least 1");
  for (std::size_t rows : vocab_rows) {
    if (rows == 0) throw ConfigError("every field needs at least one embedding row");
  }
  const bool needs_depth = kind == ModelKind::dagfm || kind == ModelKind::dagfm_plus || kind == ModelKind::cin ||
                           kind == ModelKind::crossnet;
  if (needs_depth && depth == 0) throw ConfigError("depth must be at least 1 for " + to_string(kind));
  if (kind == ModelKind::cin) {
    if (!cin_layers.empty() && cin_layers.size() != depth) {
      throw ConfigError("cin_layers lists " + std::to_string(cin_layers.size()) + " sizes for depth " +
                        std::to_string(depth));
    }
    for (std::size_t h : cin_sizes()) {
      if (h == 0) throw ConfigError("CIN layer sizes must be positive");
    }
  }
  for (std::size_t h : mlp_hidden) {
    if (h == 0) throw ConfigError("MLP hidden widths must be positive");
  }
  for (const auto& e : removed_edges) {
    if (e.from > e.to || e.to >= num_fields()) {
      throw ConfigError("removed edge " + std::to_string(e.from + 1) + "->" + std::to_string(e.to + 1) +
                        " is not a forward edge of this DAG");
    }
    if (e.from == e.to) throw ConfigError("self-pairs are always present and cannot be removed");
  }
}

nlohmann::json ModelSpec::to_json() const {
  nlohmann::json removed = nlohmann::json::array();
  for (const auto& e : removed_edges) removed.push_back({e.from, e.to});
  return {
      {"kind", to_string(kind)},
      {"fn", to_string(fn)},
      {"vocab_rows", vocab_rows},
      {"embed_dim", embed_dim},
      {"depth", depth},
      {"cin_layers", cin_layers},
      {"mlp_hidden", mlp_hidden},
      {"plus_states", to_string(plus_states)},
      {"removed_edges", removed},
  };
}

ModelSpec ModelSpec::from_json(const nlohmann::json& j) {
  try {
    ModelSpec spec;
    spec.kind = parse_model_kind(j.at("kind").get<std::string>());
    spec.fn = parse_interaction_fn(j.at("fn").get<std::string>());
    spec.vocab_rows = j.at("vocab_rows").get<std::vector<std::size_t>>();
    spec.embed_dim = j.at("embed_dim").get<std::size_t>();
    spec.depth = j.at("depth").get<std::size_t>();
    spec.cin_layers = j.at("cin_layers").get<std::vector<std::size_t>>();
    spec.mlp_hidden = j.at("mlp_hidden").get<std::vector<std::size_t>>();
    spec.plus_states = parse_plus_states(j.at("plus_states").get<std::string>());
    for (const auto& e : j.at("removed_edges")) {
      spec.removed_edges.push_back({e.at(0).get<std::size_t>(), e.at(1).get<std::size_t>()});
    }
    return spec;
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("malformed model spec: ") + e.what());
  }
}

EmbeddingTable::EmbeddingTable(ParamStore& store, const std::vector<std::size_t>& vocab_rows, std::size_t dim,
                               std::mt19937_64& rng)
    : rows_(vocab_rows), dim_(dim) {
  std::normal_distribution<double> dist(0.0, kEmbeddingInitStd);
  for (std::size_t f = 0; f < vocab_rows.size(); ++f) {
    Tensor table({vocab_rows[f], dim});
    for (double& v : table.data()) v = dist(rng);
    handles_.push_back(store.add("embedding." + std::to_string(f), std::move(table)));
  }
}

void EmbeddingTable::gather(const ParamStore& store, std::span<const FieldIndex> row, std::span<double> out) const {
  if (row.size() != handles_.size()) {
    throw ShapeError("instance has " + std::to_string(row.size()) + " fields, model expects " +
                     std::to_string(handles_.size()));
  }
  for (std::size_t f = 0; f < row.size(); ++f) {
    if (row[f] >= rows_[f]) {
      throw LookupError("index " + std::to_string(row[f]) + " is out of range for field " + std::to_string(f) +
                        " (" + std::to_string(rows_[f]) + " rows)");
    }
    const double* src = store.value(handles_[f]).ptr() + static_cast<std::size_t>(row[f]) * dim_;
    std::copy(src, src + dim_, out.begin() + static_cast<std::ptrdiff_t>(f * dim_));
  }
}

void EmbeddingTable::scatter_add(Gradients& grads, std::span<const FieldIndex> row,
                                 std::span<const double> grad) const {
  for (std::size_t f = 0; f < row.size(); ++f) {
    double* dst = grads.ptr(handles_[f]) + static_cast<std::size_t>(row[f]) * dim_;
    const double* src = grad.data() + f * dim_;
    for (std::size_t k = 0; k < dim_; ++k) dst[k] += src[k];
  }
}

Model::Model(ModelSpec spec, std::mt19937_64& rng) : spec_(std::move(spec)) {
  spec_.validate();
  embeddings_ = EmbeddingTable(params_, spec_.vocab_rows, spec_.embed_dim, rng);
}

double Model::logit(std::span<const FieldIndex> row) const {
  std::vector<double> emb(spec_.num_fields() * spec_.embed_dim);
  embeddings_.gather(params_, row, emb);
  return forward_embedded(emb);
}

double Model::logit_with_gradient(std::span<const FieldIndex> row, const LogitGradient& loss_grad,
                                  Gradients& grads) const {
  std::vector<double> emb(spec_.num_fields() * spec_.embed_dim);
  embeddings_.gather(params_, row, emb);
  std::vector<double> grad_emb(emb.size(), 0.0);
  const double z = backward_embedded(emb, loss_grad, grads, grad_emb);
  embeddings_.scatter_add(grads, row, grad_emb);
  return z;
}

FlopCount Model::counted_forward(std::span<const FieldIndex> row) const {
  std::vector<double> emb(spec_.num_fields() * spec_.embed_dim);
  embeddings_.gather(params_, row, emb);
  std::vector<Counted> counted(emb.size());
  for (std::size_t k = 0; k < emb.size(); ++k) counted[k] = Counted(emb[k]);
  FlopScope scope;
  counted_embedded(counted);
  return scope.count();
}

}  // namespace dagfm
