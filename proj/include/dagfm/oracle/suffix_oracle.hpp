#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "dagfm/interactions/dagfm.hpp"

namespace dagfm::oracle {

// The brute-force oracle is exponential; it refuses anything larger.
inline constexpr std::size_t kMaxFields = 6;
inline constexpr std::size_t kMaxOrder = 5;
inline constexpr double kPassThreshold = 1e-10;
inline constexpr double kDenominatorFloor = 1e-12;

/// All order-t interactions whose suffix (largest field index) is `suffix`.
/// Members are non-decreasing 0-based field-index tuples of length t ending
/// in `suffix`, in lexicographic order.
struct SuffixSet {
  std::size_t order = 0;
  std::size_t suffix = 0;
  std::vector<std::vector<std::size_t>> members;
};

SuffixSet enumerate_suffix_set(std::size_t m, std::size_t t, std::size_t suffix);

// Stars-and-bars size of a suffix set: C(suffix + t - 1, t - 1) for a 0-based suffix.
std::uint64_t suffix_set_size(std::size_t t, std::size_t suffix);

// Sum over the suffix set of the elementwise product of member embeddings.
// `emb` is m x d row-major. This is the DP state with identity weights.
std::vector<double> oracle_node_state(std::span<const double> emb, std::size_t m, std::size_t d, std::size_t t,
                                      std::size_t suffix);

// Weighted-path oracle for any edge weights: each tuple (j_1 <= ... <= j_t)
// is the unique path n_{j1} -> n_{j2} -> ... -> n_{jt} through the layers,
// evaluated by applying the edge function of layer s to (running value,
// e_{j_{s+1}}) along the path; the results are summed.
std::vector<double> oracle_path_state(const DagfmModel& model, std::span<const double> emb, std::size_t t,
                                      std::size_t suffix);

enum class DpReference { suffix_sum, weighted_paths };

struct DpReport {
  std::size_t num_fields = 0;
  std::size_t dim = 0;
  std::size_t depth = 0;
  InteractionFn fn = InteractionFn::basic_inner;
  DpReference reference = DpReference::suffix_sum;
  // deviation[t][i] for state layer t = 0..depth (order t + 1) and node i.
  std::vector<std::vector<double>> deviation;
  double max_deviation = 0.0;
  bool pass = false;
};

// Compares every propagated node state against the chosen oracle. Relative
// deviation per cell is max_k |h - o| / (|o| + 1e-12). Refuses masked DAGs.
DpReport check_dp_equivalence(const DagfmModel& model, std::span<const double> emb, DpReference reference);

// Builds a DAGFM with the given function on the full DAG and random N(0, 1)
// embeddings from `seed`. basic-inner, inner and kernel are set to their
// identity weights and checked against the plain suffix sums. The outer
// function has no identity point when d > 1, so it keeps its seeded random
// weights and is checked against the weighted-path oracle (d = 1 uses p = q = 1
// and the suffix sums).
DpReport assert_dp_equivalence(InteractionFn fn, std::size_t m, std::size_t d, std::size_t depth,
                               std::uint64_t seed);

std::string format_report(const DpReport& report);

// Builds an outer-function DAGFM with seeded random (p, q) and a kernel-function
// DAGFM whose matrices are W = pᵀq, runs both on the same random embeddings
// and returns the max relative deviation over all node states.
double outer_kernel_propagation_deviation(std::size_t m, std::size_t d, std::size_t depth, std::uint64_t seed);

/// Symbolic expansion of one embedding coordinate: monomials are sorted
/// field-index tuples, coefficients are products of edge weights.
using Monomial = std::vector<std::size_t>;
using Polynomial = std::map<Monomial, double>;

// Runs the propagation recurrence symbolically on coordinate `k` for a
// basic-inner or inner DAGFM and returns the state polynomials of layer `t`
// (0-based state layer, order t + 1), one per node.
std::vector<Polynomial> symbolic_states(const DagfmModel& model, std::size_t t, std::size_t k);

// Product of inner edge weights (coordinate k) along the DP path of `tuple`.
double path_weight(const DagfmModel& model, std::span<const std::size_t> tuple, std::size_t k);

}  // namespace dagfm::oracle
