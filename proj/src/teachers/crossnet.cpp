#include "dagfm/teachers/crossnet.hpp"

#include <cmath>

#include "dagfm/numcore/errors.hpp"

namespace dagfm {

template <class T>
struct CrossNetModel::Work {
  std::vector<std::vector<T>> xs;  // x_0..x_L
  std::vector<std::vector<T>> zs;  // W_t x_t + b_t
};

CrossNetModel::CrossNetModel(ModelSpec spec, std::mt19937_64& rng) : Model(std::move(spec), rng) {
  if (spec_.kind != ModelKind::crossnet) {
    throw ConfigError("CrossNetModel cannot be built for kind " + to_string(spec_.kind));
  }
  const std::size_t n = width();
  std::normal_distribution<double> dist(0.0, 1.0 / std::sqrt(static_cast<double>(n)));
  for (std::size_t t = 0; t < spec_.depth; ++t) {
    Tensor W({n, n});
    for (double& v : W.data()) v = dist(rng);
    weights_.push_back(params_.add("cross.layer" + std::to_string(t) + ".W", std::move(W)));
    biases_.push_back(params_.add("cross.layer" + std::to_string(t) + ".b", Tensor({n})));
  }
  head_w_ = params_.add("cross.head.weight", Tensor({n}));
  head_b_ = params_.add("cross.head.bias", Tensor({1}));
}

template <class T>
T CrossNetModel::run(std::span<const T> emb, Work<T>& work) const {
  const std::size_t n = width();
  work.xs.resize(spec_.depth + 1);
  work.zs.resize(spec_.depth);
  work.xs[0].assign(emb.begin(), emb.end());
  const std::vector<T>& x0 = work.xs[0];
  for (std::size_t t = 0; t < spec_.depth; ++t) {
    const std::vector<T>& x = work.xs[t];
    const double* W = params_.value(weights_[t]).ptr();
    const double* b = params_.value(biases_[t]).ptr();
    std::vector<T>& z = work.zs[t];
    std::vector<T>& next = work.xs[t + 1];
    z.resize(n);
    next.resize(n);
    for (std::size_t r = 0; r < n; ++r) {
      const double* row = W + r * n;
      T acc = T(row[0]) * x[0];
      for (std::size_t c = 1; c < n; ++c) acc += T(row[c]) * x[c];
      z[r] = acc + T(b[r]);
    }
    for (std::size_t r = 0; r < n; ++r) next[r] = x0[r] * z[r] + x[r];
  }
  const std::vector<T>& xl = work.xs.back();
  const double* v = params_.value(head_w_).ptr();
  T logit = T(v[0]) * xl[0];
  for (std::size_t r = 1; r < n; ++r) logit += T(v[r]) * xl[r];
  return logit + T(params_.value(head_b_)[0]);
}

std::vector<double> CrossNetModel::cross(std::span<const double> x0) const {
  if (x0.size() != width()) throw ShapeError("cross network expects an input of width " + std::to_string(width()));
  Work<double> work;
  run<double>(x0, work);
  return work.xs.back();
}

double CrossNetModel::forward_embedded(std::span<const double> emb) const {
  Work<double> work;
  return run<double>(emb, work);
}

Counted CrossNetModel::counted_embedded(std::span<const Counted> emb) const {
  Work<Counted> work;
  return run<Counted>(emb, work);
}

double CrossNetModel::backward_embedded(std::span<const double> emb, const LogitGradient& loss_grad,
                                        Gradients& grads, std::span<double> grad_emb) const {
  Work<double> work;
  const double logit = run<double>(emb, work);
  const double u = loss_grad(logit);
  const std::size_t n = width();

  const std::vector<double>& x0 = work.xs[0];
  const std::vector<double>& xl = work.xs.back();
  const double* v = params_.value(head_w_).ptr();
  double* gv = grads.ptr(head_w_);
  grads.ptr(head_b_)[0] += u;
  std::vector<double> g(n);
  for (std::size_t r = 0; r < n; ++r) {
    gv[r] += u * xl[r];
    g[r] = u * v[r];
  }

  std::vector<double> gx0(n, 0.0);
  std::vector<double> dz(n);
  for (std::size_t t = spec_.depth; t-- > 0;) {
    const std::vector<double>& x = work.xs[t];
    const std::vector<double>& z = work.zs[t];
    const double* W = params_.value(weights_[t]).ptr();
    double* gW = grads.ptr(weights_[t]);
    double* gb = grads.ptr(biases_[t]);
    for (std::size_t r = 0; r < n; ++r) {
      dz[r] = g[r] * x0[r];
      gx0[r] += g[r] * z[r];
      gb[r] += dz[r];
    }
    // g_t = g_{t+1} (residual) + W_tᵀ dz
    for (std::size_t r = 0; r < n; ++r) {
      const double dzr = dz[r];
      if (dzr == 0.0) continue;
      const double* row = W + r * n;
      double* grow = gW + r * n;
      for (std::size_t c = 0; c < n; ++c) {
        grow[c] += dzr * x[c];
        g[c] += dzr * row[c];
      }
    }
  }
  for (std::size_t r = 0; r < n; ++r) grad_emb[r] += g[r] + gx0[r];
  return logit;
}

}  // namespace dagfm
