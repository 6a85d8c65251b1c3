#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace dagfm {

// Interaction learning functions phi(a, b) -> R^d. In DAG propagation `a` is
// the source node state and `b` the target node's initial state.
//
// The pointer kernels below write into `out` and are shared by the models and
// the public span API; they are templated so the same arithmetic can run on
// instrumented scalars. `W` is d x d row-major.
namespace kernels {

template <class T>
void basic_inner(const T* a, const T* b, T* out, std::size_t d) {
  for (std::size_t k = 0; k < d; ++k) out[k] = a[k] * b[k];
}

template <class T>
void inner(const T* a, const T* b, const double* w, T* out, std::size_t d) {
  for (std::size_t k = 0; k < d; ++k) out[k] = (T(w[k]) * a[k]) * b[k];
}

// (a W) ⊙ b
template <class T>
void kernel(const T* a, const T* b, const double* W, T* out, std::size_t d) {
  for (std::size_t l = 0; l < d; ++l) {
    T acc = a[0] * T(W[l]);
    for (std::size_t k = 1; k < d; ++k) acc += a[k] * T(W[k * d + l]);
    out[l] = acc * b[l];
  }
}

// (a · p) (q ⊙ b): the kernel function with W = pᵀq at O(d) cost.
template <class T>
void outer(const T* a, const T* b, const double* p, const double* q, T* out, std::size_t d) {
  T s = a[0] * T(p[0]);
  for (std::size_t k = 1; k < d; ++k) s += a[k] * T(p[k]);
  for (std::size_t k = 0; k < d; ++k) out[k] = s * (T(q[k]) * b[k]);
}

}  // namespace kernels

std::vector<double> phi_basic_inner(std::span<const double> a, std::span<const double> b);
std::vector<double> phi_inner(std::span<const double> a, std::span<const double> b, std::span<const double> w);
// `W` holds d*d values, row-major.
std::vector<double> phi_kernel(std::span<const double> a, std::span<const double> b, std::span<const double> W);
std::vector<double> phi_outer(std::span<const double> a, std::span<const double> b, std::span<const double> p,
                              std::span<const double> q);

}  // namespace dagfm
