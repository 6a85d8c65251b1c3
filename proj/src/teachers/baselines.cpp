#include "dagfm/teachers/baselines.hpp"

#include "dagfm/interactions/functions.hpp"
#include "dagfm/numcore/errors.hpp"

namespace dagfm {

PairwiseFmModel::PairwiseFmModel(ModelSpec spec, std::mt19937_64& rng) : Model(std::move(spec), rng) {
  if (spec_.kind != ModelKind::fwfm && spec_.kind != ModelKind::fmfm) {
    throw ConfigError("PairwiseFmModel cannot be built for kind " + to_string(spec_.kind));
  }
  const std::size_t m = spec_.num_fields();
  const std::size_t d = spec_.embed_dim;
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = i + 1; j < m; ++j) pairs_.emplace_back(i, j);
  }
  if (spec_.kind == ModelKind::fwfm) {
    pair_w_ = params_.add("fwfm.pair.w", Tensor({pairs_.size(), d}, 1.0));
  } else {
    Tensor W({pairs_.size(), d, d});
    for (std::size_t p = 0; p < pairs_.size(); ++p) {
      for (std::size_t k = 0; k < d; ++k) W[(p * d + k) * d + k] = 1.0;
    }
    pair_w_ = params_.add("fmfm.pair.W", std::move(W));
  }
  const std::string prefix = to_string(spec_.kind);
  linear_ = params_.add(prefix + ".linear", Tensor({m, d}));
  bias_ = params_.add(prefix + ".bias", Tensor({1}));
}

template <class T>
T PairwiseFmModel::run(std::span<const T> emb) const {
  const std::size_t d = spec_.embed_dim;
  const double* w = params_.value(pair_w_).ptr();
  const bool kernel = spec_.kind == ModelKind::fmfm;
  std::vector<T> phi(d);
  T pair_sum{};
  for (std::size_t p = 0; p < pairs_.size(); ++p) {
    const T* a = emb.data() + pairs_[p].first * d;
    const T* b = emb.data() + pairs_[p].second * d;
    if (kernel) {
      kernels::kernel(a, b, w + p * d * d, phi.data(), d);
    } else {
      kernels::inner(a, b, w + p * d, phi.data(), d);
    }
    T pooled = phi[0];
    for (std::size_t k = 1; k < d; ++k) pooled += phi[k];
    pair_sum = p == 0 ? pooled : pair_sum + pooled;
  }
  const double* v = params_.value(linear_).ptr();
  T linear = T(v[0]) * emb[0];
  for (std::size_t n = 1; n < emb.size(); ++n) linear += T(v[n]) * emb[n];
  return pair_sum + linear + T(params_.value(bias_)[0]);
}

double PairwiseFmModel::forward_embedded(std::span<const double> emb) const { return run<double>(emb); }

Counted PairwiseFmModel::counted_embedded(std::span<const Counted> emb) const { return run<Counted>(emb); }

double PairwiseFmModel::backward_embedded(std::span<const double> emb, const LogitGradient& loss_grad,
                                          Gradients& grads, std::span<double> grad_emb) const {
  const double logit = run<double>(emb);
  const double u = loss_grad(logit);
  const std::size_t d = spec_.embed_dim;
  const double* w = params_.value(pair_w_).ptr();
  double* gw = grads.ptr(pair_w_);
  const bool kernel = spec_.kind == ModelKind::fmfm;

  grads.ptr(bias_)[0] += u;
  const double* v = params_.value(linear_).ptr();
  double* gv = grads.ptr(linear_);
  for (std::size_t n = 0; n < emb.size(); ++n) {
    gv[n] += u * emb[n];
    grad_emb[n] += u * v[n];
  }

  for (std::size_t p = 0; p < pairs_.size(); ++p) {
    const std::size_t i = pairs_[p].first;
    const std::size_t j = pairs_[p].second;
    const double* a = emb.data() + i * d;
    const double* b = emb.data() + j * d;
    double* ga = grad_emb.data() + i * d;
    double* gb = grad_emb.data() + j * d;
    if (kernel) {
      // sum_l (a W)_l b_l = aᵀ W b
      const double* W = w + p * d * d;
      double* gW = gw + p * d * d;
      for (std::size_t k = 0; k < d; ++k) {
        double wa = 0.0;
        for (std::size_t l = 0; l < d; ++l) {
          gW[k * d + l] += u * a[k] * b[l];
          wa += W[k * d + l] * b[l];
          gb[l] += u * a[k] * W[k * d + l];
        }
        ga[k] += u * wa;
      }
    } else {
      const double* wv = w + p * d;
      double* gwv = gw + p * d;
      for (std::size_t k = 0; k < d; ++k) {
        gwv[k] += u * a[k] * b[k];
        ga[k] += u * wv[k] * b[k];
        gb[k] += u * wv[k] * a[k];
      }
    }
  }
  return logit;
}

TinyMlpModel::TinyMlpModel(ModelSpec spec, std::mt19937_64& rng) : Model(std::move(spec), rng) {
  if (spec_.kind != ModelKind::tiny_mlp) {
    throw ConfigError("TinyMlpModel cannot be built for kind " + to_string(spec_.kind));
  }
  if (spec_.mlp_hidden.empty()) spec_.mlp_hidden = kTinyMlpHidden;
  mlp_ = Mlp(params_, "mlp", spec_.num_fields() * spec_.embed_dim, spec_.mlp_hidden, 1, rng);
}

double TinyMlpModel::forward_embedded(std::span<const double> emb) const {
  MlpTrace<double> trace;
  mlp_.forward(params_, emb, trace);
  return trace.output()[0];
}

Counted TinyMlpModel::counted_embedded(std::span<const Counted> emb) const {
  MlpTrace<Counted> trace;
  mlp_.forward(params_, emb, trace);
  return trace.output()[0];
}

double TinyMlpModel::backward_embedded(std::span<const double> emb, const LogitGradient& loss_grad,
                                       Gradients& grads, std::span<double> grad_emb) const {
  MlpTrace<double> trace;
  mlp_.forward(params_, emb, trace);
  const double logit = trace.output()[0];
  const double up[1] = {loss_grad(logit)};
  mlp_.backward(params_, trace, up, grads, grad_emb);
  return logit;
}

}  // namespace dagfm
