#include "dagfm/interactions/dagfm.hpp"

#include <algorithm>
#include <cmath>

#include "dagfm/interactions/functions.hpp"
#include "dagfm/numcore/errors.hpp"

namespace dagfm {

template <class T>
struct DagfmModel::Work {
  std::vector<T> states;  // (depth + 1) x m x d
  std::vector<T> pooled;  // (depth + 1) x m
  std::vector<T> edge;    // d
  MlpTrace<T> tower;
};

DagfmModel::DagfmModel(ModelSpec spec, std::mt19937_64& rng) : Model(std::move(spec), rng) {
  if (spec_.kind != ModelKind::dagfm && spec_.kind != ModelKind::dagfm_plus) {
    throw ConfigError("DagfmModel cannot be built for kind " + to_string(spec_.kind));
  }
  const std::size_t m = spec_.num_fields();
  const std::size_t d = spec_.embed_dim;

  sources_.resize(m);
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = 0; j <= i; ++j) {
      const bool removed = std::find(spec_.removed_edges.begin(), spec_.removed_edges.end(), DagEdge{j, i}) !=
                           spec_.removed_edges.end();
      if (!removed) sources_[i].push_back({j, num_pairs_++});
    }
  }

  const double outer_std = 1.0 / std::sqrt(static_cast<double>(d));
  std::normal_distribution<double> outer_init(0.0, outer_std);
  for (std::size_t t = 0; t < spec_.depth; ++t) {
    const std::string base = "dagfm.layer" + std::to_string(t);
    switch (spec_.fn) {
      case InteractionFn::basic_inner:
        break;
      case InteractionFn::inner:
        edge_a_.push_back(params_.add(base + ".w", Tensor({num_pairs_, d}, 1.0)));
        break;
      case InteractionFn::kernel: {
        Tensor W({num_pairs_, d, d});
        for (std::size_t p = 0; p < num_pairs_; ++p) {
          for (std::size_t k = 0; k < d; ++k) W[(p * d + k) * d + k] = 1.0;
        }
        edge_a_.push_back(params_.add(base + ".W", std::move(W)));
        break;
      }
      case InteractionFn::outer: {
        Tensor p({num_pairs_, d});
        Tensor q({num_pairs_, d});
        for (double& v : p.data()) v = outer_init(rng);
        for (double& v : q.data()) v = outer_init(rng);
        edge_a_.push_back(params_.add(base + ".p", std::move(p)));
        edge_b_.push_back(params_.add(base + ".q", std::move(q)));
        break;
      }
    }
  }
  head_w_ = params_.add("dagfm.head.weight", Tensor({m * (spec_.depth + 1)}));
  head_b_ = params_.add("dagfm.head.bias", Tensor({1}));

  if (spec_.kind == ModelKind::dagfm_plus) {
    tower_ = Mlp(params_, "plus.mlp", tower_input_width(), spec_.mlp_hidden, 1, rng);
  }
}

std::size_t DagfmModel::tower_input_width() const {
  const std::size_t layers = spec_.plus_states == PlusStates::all_layers ? spec_.depth + 1 : 1;
  return layers * spec_.num_fields() * spec_.embed_dim;
}

std::optional<std::size_t> DagfmModel::pair_index(std::size_t from, std::size_t to) const {
  if (to >= sources_.size()) return std::nullopt;
  for (const auto& s : sources_[to]) {
    if (s.field == from) return s.pair;
  }
  return std::nullopt;
}

void DagfmModel::set_identity_weights() {
  const std::size_t d = spec_.embed_dim;
  for (std::size_t t = 0; t < spec_.depth; ++t) {
    switch (spec_.fn) {
      case InteractionFn::basic_inner:
        break;
      case InteractionFn::inner:
        params_.value(edge_a_[t]).fill(1.0);
        break;
      case InteractionFn::kernel: {
        Tensor& W = params_.value(edge_a_[t]);
        W.fill(0.0);
        for (std::size_t p = 0; p < num_pairs_; ++p) {
          for (std::size_t k = 0; k < d; ++k) W[(p * d + k) * d + k] = 1.0;
        }
        break;
      }
      case InteractionFn::outer:
        if (d != 1) throw ConfigError("the outer function has no identity weights for d > 1");
        params_.value(edge_a_[t]).fill(1.0);
        params_.value(edge_b_[t]).fill(1.0);
        break;
    }
  }
}

template <class T>
T DagfmModel::run(std::span<const T> emb, Work<T>& work) const {
  const std::size_t m = spec_.num_fields();
  const std::size_t d = spec_.embed_dim;
  const std::size_t layers = spec_.depth + 1;
  const std::size_t block = m * d;

  work.states.resize(layers * block);
  work.pooled.resize(layers * m);
  work.edge.resize(d);
  std::copy(emb.begin(), emb.end(), work.states.begin());

  const T* initial = work.states.data();
  for (std::size_t t = 0; t < spec_.depth; ++t) {
    const T* h = work.states.data() + t * block;
    T* next = work.states.data() + (t + 1) * block;
    const double* wa = spec_.fn == InteractionFn::basic_inner ? nullptr : params_.value(edge_a_[t]).ptr();
    const double* wb = spec_.fn == InteractionFn::outer ? params_.value(edge_b_[t]).ptr() : nullptr;
    for (std::size_t i = 0; i < m; ++i) {
      const T* b = initial + i * d;
      T* out = next + i * d;
      bool first = true;
      for (const Source& src : sources_[i]) {
        const T* a = h + src.field * d;
        T* dst = first ? out : work.edge.data();
        switch (spec_.fn) {
          case InteractionFn::basic_inner:
            kernels::basic_inner(a, b, dst, d);
            break;
          case InteractionFn::inner:
            kernels::inner(a, b, wa + src.pair * d, dst, d);
            break;
          case InteractionFn::kernel:
            kernels::kernel(a, b, wa + src.pair * d * d, dst, d);
            break;
          case InteractionFn::outer:
            kernels::outer(a, b, wa + src.pair * d, wb + src.pair * d, dst, d);
            break;
        }
        if (!first) {
          for (std::size_t k = 0; k < d; ++k) out[k] += dst[k];
        }
        first = false;
      }
    }
  }

  for (std::size_t n = 0; n < layers * m; ++n) {
    const T* s = work.states.data() + n * d;
    T acc = s[0];
    for (std::size_t k = 1; k < d; ++k) acc += s[k];
    work.pooled[n] = acc;
  }

  const double* w = params_.value(head_w_).ptr();
  T logit = work.pooled[0] * T(w[0]);
  for (std::size_t n = 1; n < layers * m; ++n) logit += work.pooled[n] * T(w[n]);
  logit = logit + T(params_.value(head_b_)[0]);

  if (spec_.kind == ModelKind::dagfm_plus) {
    std::span<const T> input(work.states);
    if (spec_.plus_states == PlusStates::last_layer) input = input.subspan(spec_.depth * block, block);
    tower_.forward(params_, input, work.tower);
    logit = logit + work.tower.output()[0];
  }
  return logit;
}

std::vector<double> DagfmModel::propagate(std::span<const double> states, std::span<const double> initial,
                                          std::size_t layer) const {
  const std::size_t block = spec_.num_fields() * spec_.embed_dim;
  if (layer >= spec_.depth) {
    throw ConfigError("propagation layer " + std::to_string(layer) + " is out of range (model has " +
                      std::to_string(spec_.depth) + ")");
  }
  if (states.size() != block || initial.size() != block) throw ShapeError("propagate expects m x d state matrices");
  const std::size_t d = spec_.embed_dim;
  std::vector<double> next(block);
  std::vector<double> edge(d);
  const double* wa = spec_.fn == InteractionFn::basic_inner ? nullptr : params_.value(edge_a_[layer]).ptr();
  const double* wb = spec_.fn == InteractionFn::outer ? params_.value(edge_b_[layer]).ptr() : nullptr;
  for (std::size_t i = 0; i < spec_.num_fields(); ++i) {
    double* out = next.data() + i * d;
    for (const Source& src : sources_[i]) {
      const double* a = states.data() + src.field * d;
      const double* b = initial.data() + i * d;
      switch (spec_.fn) {
        case InteractionFn::basic_inner:
          kernels::basic_inner(a, b, edge.data(), d);
          break;
        case InteractionFn::inner:
          kernels::inner(a, b, wa + src.pair * d, edge.data(), d);
          break;
        case InteractionFn::kernel:
          kernels::kernel(a, b, wa + src.pair * d * d, edge.data(), d);
          break;
        case InteractionFn::outer:
          kernels::outer(a, b, wa + src.pair * d, wb + src.pair * d, edge.data(), d);
          break;
      }
      for (std::size_t k = 0; k < d; ++k) out[k] += edge[k];
    }
  }
  return next;
}

PropagationTrace DagfmModel::trace(std::span<const FieldIndex> row) const {
  std::vector<double> emb(spec_.num_fields() * spec_.embed_dim);
  embeddings_.gather(params_, row, emb);
  return trace_embedded(emb);
}

PropagationTrace DagfmModel::trace_embedded(std::span<const double> emb) const {
  Work<double> work;
  PropagationTrace tr;
  tr.logit = run<double>(emb, work);
  tr.num_layers = spec_.depth + 1;
  tr.num_fields = spec_.num_fields();
  tr.dim = spec_.embed_dim;
  tr.states = std::move(work.states);
  tr.pooled = std::move(work.pooled);
  return tr;
}

double DagfmModel::forward_embedded(std::span<const double> emb) const {
  Work<double> work;
  return run<double>(emb, work);
}

Counted DagfmModel::counted_embedded(std::span<const Counted> emb) const {
  Work<Counted> work;
  return run<Counted>(emb, work);
}

double DagfmModel::backward_embedded(std::span<const double> emb, const LogitGradient& loss_grad, Gradients& grads,
                                     std::span<double> grad_emb) const {
  Work<double> work;
  const double logit = run<double>(emb, work);
  const double u = loss_grad(logit);

  const std::size_t m = spec_.num_fields();
  const std::size_t d = spec_.embed_dim;
  const std::size_t layers = spec_.depth + 1;
  const std::size_t block = m * d;
  std::vector<double> gs(layers * block, 0.0);

  if (spec_.kind == ModelKind::dagfm_plus) {
    std::span<double> target(gs);
    if (spec_.plus_states == PlusStates::last_layer) target = target.subspan(spec_.depth * block, block);
    const double up[1] = {u};
    tower_.backward(params_, work.tower, up, grads, target);
  }

  const double* w = params_.value(head_w_).ptr();
  double* gw = grads.ptr(head_w_);
  grads.ptr(head_b_)[0] += u;
  for (std::size_t n = 0; n < layers * m; ++n) {
    gw[n] += u * work.pooled[n];
    const double g = u * w[n];
    double* dst = gs.data() + n * d;
    for (std::size_t k = 0; k < d; ++k) dst[k] += g;
  }

  const double* initial = work.states.data();
  double* g_initial = gs.data();
  std::vector<double> c(d);
  for (std::size_t t = spec_.depth; t-- > 0;) {
    const double* h = work.states.data() + t * block;
    double* gh = gs.data() + t * block;
    const double* G_layer = gs.data() + (t + 1) * block;
    const double* wa = spec_.fn == InteractionFn::basic_inner ? nullptr : params_.value(edge_a_[t]).ptr();
    const double* wb = spec_.fn == InteractionFn::outer ? params_.value(edge_b_[t]).ptr() : nullptr;
    double* ga = spec_.fn == InteractionFn::basic_inner ? nullptr : grads.ptr(edge_a_[t]);
    double* gb = spec_.fn == InteractionFn::outer ? grads.ptr(edge_b_[t]) : nullptr;

    for (std::size_t i = 0; i < m; ++i) {
      const double* G = G_layer + i * d;
      const double* b = initial + i * d;
      double* db = g_initial + i * d;
      for (const Source& src : sources_[i]) {
        const double* a = h + src.field * d;
        double* da = gh + src.field * d;
        switch (spec_.fn) {
          case InteractionFn::basic_inner:
            for (std::size_t k = 0; k < d; ++k) {
              da[k] += G[k] * b[k];
              db[k] += G[k] * a[k];
            }
            break;
          case InteractionFn::inner: {
            const double* wv = wa + src.pair * d;
            double* gwv = ga + src.pair * d;
            for (std::size_t k = 0; k < d; ++k) {
              da[k] += G[k] * wv[k] * b[k];
              db[k] += G[k] * wv[k] * a[k];
              gwv[k] += G[k] * a[k] * b[k];
            }
            break;
          }
          case InteractionFn::kernel: {
            const double* W = wa + src.pair * d * d;
            double* gW = ga + src.pair * d * d;
            for (std::size_t l = 0; l < d; ++l) {
              double acc = 0.0;
              for (std::size_t k = 0; k < d; ++k) acc += a[k] * W[k * d + l];
              c[l] = acc;
            }
            for (std::size_t l = 0; l < d; ++l) db[l] += G[l] * c[l];
            for (std::size_t k = 0; k < d; ++k) {
              double acc = 0.0;
              for (std::size_t l = 0; l < d; ++l) {
                const double dc = G[l] * b[l];
                acc += W[k * d + l] * dc;
                gW[k * d + l] += a[k] * dc;
              }
              da[k] += acc;
            }
            break;
          }
          case InteractionFn::outer: {
            const double* p = wa + src.pair * d;
            const double* q = wb + src.pair * d;
            double* gp = ga + src.pair * d;
            double* gq = gb + src.pair * d;
            double s = 0.0;
            double ds = 0.0;
            for (std::size_t k = 0; k < d; ++k) s += a[k] * p[k];
            for (std::size_t k = 0; k < d; ++k) {
              ds += G[k] * q[k] * b[k];
              gq[k] += s * G[k] * b[k];
              db[k] += s * G[k] * q[k];
            }
            for (std::size_t k = 0; k < d; ++k) {
              da[k] += ds * p[k];
              gp[k] += ds * a[k];
            }
            break;
          }
        }
      }
    }
  }

  for (std::size_t k = 0; k < block; ++k) grad_emb[k] += gs[k];
  return logit;
}

}  // namespace dagfm
