#pragma once

#include <cstdint>

namespace dagfm {

/// Floating-point operation tally: one multiplication = 1, one addition or
/// subtraction = 1. Comparisons and copies are free.
struct FlopCount {
  std::uint64_t mults = 0;
  std::uint64_t adds = 0;
  std::uint64_t total() const { return mults + adds; }
  friend bool operator==(const FlopCount&, const FlopCount&) = default;
};

namespace detail {
inline thread_local FlopCount flop_tally{};
}

/// Scalar that counts its own arithmetic in a thread-local tally.
///
/// Model forward passes are templated on the scalar type; running them with
/// `Counted` yields an operation count measured at runtime, which is the
/// reference the closed-form FLOPs formulas are checked against.
struct Counted {
  double v = 0.0;

  Counted() = default;
  explicit Counted(double value) : v(value) {}

  friend Counted operator+(Counted a, Counted b) {
    ++detail::flop_tally.adds;
    return Counted(a.v + b.v);
  }
  friend Counted operator-(Counted a, Counted b) {
    ++detail::flop_tally.adds;
    return Counted(a.v - b.v);
  }
  friend Counted operator*(Counted a, Counted b) {
    ++detail::flop_tally.mults;
    return Counted(a.v * b.v);
  }
  Counted& operator+=(Counted o) { return *this = *this + o; }
  Counted& operator*=(Counted o) { return *this = *this * o; }
  friend bool operator>(Counted a, Counted b) { return a.v > b.v; }
};

inline double value_of(double x) { return x; }
inline double value_of(Counted x) { return x.v; }

// Resets the tally on construction; `count()` reads what was accumulated since.
class FlopScope {
 public:
  FlopScope() { detail::flop_tally = {}; }
  FlopCount count() const { return detail::flop_tally; }
};

}  // namespace dagfm
