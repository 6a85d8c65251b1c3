#include "dagfm/interactions/functions.hpp"

#include <string>

#include "dagfm/numcore/errors.hpp"

namespace dagfm {

namespace {

void require_same(std::size_t expected, std::size_t got, const char* what) {
  if (expected != got) {
    throw ShapeError(std::string(what) + " has length " + std::to_string(got) + ", expected " +
                     std::to_string(expected));
  }
}

}  // namespace

std::vector<double> phi_basic_inner(std::span<const double> a, std::span<const double> b) {
  require_same(a.size(), b.size(), "b");
  std::vector<double> out(a.size());
  kernels::basic_inner(a.data(), b.data(), out.data(), a.size());
  return out;
}

std::vector<double> phi_inner(std::span<const double> a, std::span<const double> b, std::span<const double> w) {
  require_same(a.size(), b.size(), "b");
  require_same(a.size(), w.size(), "w");
  std::vector<double> out(a.size());
  kernels::inner(a.data(), b.data(), w.data(), out.data(), a.size());
  return out;
}

std::vector<double> phi_kernel(std::span<const double> a, std::span<const double> b, std::span<const double> W) {
  require_same(a.size(), b.size(), "b");
  require_same(a.size() * a.size(), W.size(), "W");
  if (a.empty()) throw ShapeError("interaction inputs must be non-empty");
  std::vector<double> out(a.size());
  kernels::kernel(a.data(), b.data(), W.data(), out.data(), a.size());
  return out;
}

std::vector<double> phi_outer(std::span<const double> a, std::span<const double> b, std::span<const double> p,
                              std::span<const double> q) {
  require_same(a.size(), b.size(), "b");
  require_same(a.size(), p.size(), "p");
  require_same(a.size(), q.size(), "q");
  if (a.empty()) throw ShapeError("interaction inputs must be non-empty");
  std::vector<double> out(a.size());
  kernels::outer(a.data(), b.data(), p.data(), q.data(), out.data(), a.size());
  return out;
}

}  // namespace dagfm
