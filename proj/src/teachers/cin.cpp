#include "dagfm/teachers/cin.hpp"

#include <cmath>
#include <numeric>

#include "dagfm/numcore/errors.hpp"

namespace dagfm {

template <class T>
struct CinModel::Work {
  std::vector<std::vector<T>> maps;      // X^0..X^L
  std::vector<std::vector<T>> hadamard;  // Z^1..Z^L, each H_{k-1} x m x d
  std::vector<T> pooled;                 // sum_k H_k
};

CinModel::CinModel(ModelSpec spec, std::mt19937_64& rng) : Model(std::move(spec), rng) {
  if (spec_.kind != ModelKind::cin) throw ConfigError("CinModel cannot be built for kind " + to_string(spec_.kind));
  sizes_ = spec_.cin_sizes();
  const std::size_t m = spec_.num_fields();
  std::size_t prev = m;
  for (std::size_t k = 0; k < sizes_.size(); ++k) {
    const std::size_t fan_in = prev * m;
    std::normal_distribution<double> dist(0.0, std::sqrt(2.0 / static_cast<double>(fan_in + sizes_[k])));
    Tensor W({sizes_[k], prev, m});
    for (double& v : W.data()) v = dist(rng);
    kernels_.push_back(params_.add("cin.layer" + std::to_string(k) + ".W", std::move(W)));
    prev = sizes_[k];
  }
  const std::size_t pooled = std::accumulate(sizes_.begin(), sizes_.end(), std::size_t{0});
  head_w_ = params_.add("cin.head.weight", Tensor({pooled}));
  head_b_ = params_.add("cin.head.bias", Tensor({1}));
}

template <class T>
T CinModel::run(std::span<const T> emb, Work<T>& work) const {
  const std::size_t m = spec_.num_fields();
  const std::size_t d = spec_.embed_dim;
  const std::size_t depth = sizes_.size();
  work.maps.resize(depth + 1);
  work.hadamard.resize(depth);
  work.maps[0].assign(emb.begin(), emb.end());
  work.pooled.clear();

  const std::vector<T>& x0 = work.maps[0];
  std::size_t prev_rows = m;
  for (std::size_t k = 0; k < depth; ++k) {
    const std::vector<T>& prev = work.maps[k];
    std::vector<T>& Z = work.hadamard[k];
    Z.resize(prev_rows * m * d);
    for (std::size_t i = 0; i < prev_rows; ++i) {
      for (std::size_t j = 0; j < m; ++j) {
        T* z = Z.data() + (i * m + j) * d;
        for (std::size_t c = 0; c < d; ++c) z[c] = prev[i * d + c] * x0[j * d + c];
      }
    }
    const std::size_t rows = sizes_[k];
    const std::size_t pairs = prev_rows * m;
    const double* W = params_.value(kernels_[k]).ptr();
    std::vector<T>& out = work.maps[k + 1];
    out.resize(rows * d);
    for (std::size_t h = 0; h < rows; ++h) {
      const double* wh = W + h * pairs;
      T* o = out.data() + h * d;
      for (std::size_t c = 0; c < d; ++c) o[c] = T(wh[0]) * Z[c];
      for (std::size_t p = 1; p < pairs; ++p) {
        const T wp(wh[p]);
        const T* z = Z.data() + p * d;
        for (std::size_t c = 0; c < d; ++c) o[c] += wp * z[c];
      }
      T acc = o[0];
      for (std::size_t c = 1; c < d; ++c) acc += o[c];
      work.pooled.push_back(acc);
    }
    prev_rows = rows;
  }

  const double* v = params_.value(head_w_).ptr();
  T logit = work.pooled[0] * T(v[0]);
  for (std::size_t n = 1; n < work.pooled.size(); ++n) logit += work.pooled[n] * T(v[n]);
  return logit + T(params_.value(head_b_)[0]);
}

double CinModel::forward_embedded(std::span<const double> emb) const {
  Work<double> work;
  return run<double>(emb, work);
}

Counted CinModel::counted_embedded(std::span<const Counted> emb) const {
  Work<Counted> work;
  return run<Counted>(emb, work);
}

std::vector<std::vector<double>> CinModel::feature_maps(std::span<const double> emb) const {
  Work<double> work;
  run<double>(emb, work);
  return std::move(work.maps);
}

double CinModel::backward_embedded(std::span<const double> emb, const LogitGradient& loss_grad, Gradients& grads,
                                   std::span<double> grad_emb) const {
  Work<double> work;
  const double logit = run<double>(emb, work);
  const double u = loss_grad(logit);
  const std::size_t m = spec_.num_fields();
  const std::size_t d = spec_.embed_dim;
  const std::size_t depth = sizes_.size();

  grads.ptr(head_b_)[0] += u;
  const double* v = params_.value(head_w_).ptr();
  double* gv = grads.ptr(head_w_);
  for (std::size_t n = 0; n < work.pooled.size(); ++n) gv[n] += u * work.pooled[n];

  // Gradient of each feature map; the pooled contribution is a broadcast.
  std::vector<std::vector<double>> gmaps(depth + 1);
  gmaps[0].assign(m * d, 0.0);
  std::size_t offset = 0;
  for (std::size_t k = 0; k < depth; ++k) {
    gmaps[k + 1].resize(sizes_[k] * d);
    for (std::size_t h = 0; h < sizes_[k]; ++h) {
      for (std::size_t c = 0; c < d; ++c) gmaps[k + 1][h * d + c] = u * v[offset + h];
    }
    offset += sizes_[k];
  }

  const std::vector<double>& x0 = work.maps[0];
  std::vector<double> gx0_direct(m * d, 0.0);
  for (std::size_t k = depth; k-- > 0;) {
    const std::size_t prev_rows = k == 0 ? m : sizes_[k - 1];
    const std::size_t pairs = prev_rows * m;
    const std::vector<double>& Z = work.hadamard[k];
    const std::vector<double>& G = gmaps[k + 1];
    const double* W = params_.value(kernels_[k]).ptr();
    double* gW = grads.ptr(kernels_[k]);
    std::vector<double> gZ(pairs * d, 0.0);
    for (std::size_t h = 0; h < sizes_[k]; ++h) {
      const double* g = G.data() + h * d;
      for (std::size_t p = 0; p < pairs; ++p) {
        const double* z = Z.data() + p * d;
        double* gz = gZ.data() + p * d;
        const double w = W[h * pairs + p];
        double acc = 0.0;
        for (std::size_t c = 0; c < d; ++c) {
          acc += g[c] * z[c];
          gz[c] += w * g[c];
        }
        gW[h * pairs + p] += acc;
      }
    }
    const std::vector<double>& prev = work.maps[k];
    std::vector<double>& gprev = gmaps[k];
    for (std::size_t i = 0; i < prev_rows; ++i) {
      for (std::size_t j = 0; j < m; ++j) {
        const double* gz = gZ.data() + (i * m + j) * d;
        for (std::size_t c = 0; c < d; ++c) {
          gprev[i * d + c] += gz[c] * x0[j * d + c];
          gx0_direct[j * d + c] += gz[c] * prev[i * d + c];
        }
      }
    }
  }
  for (std::size_t n = 0; n < m * d; ++n) grad_emb[n] += gmaps[0][n] + gx0_direct[n];
  return logit;
}

}  // namespace dagfm
