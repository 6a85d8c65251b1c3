#pragma once

#include <cstddef>
#include <cstdint>
#include <span>

#include "dagfm/interactions/model.hpp"
#include "dagfm/numcore/counted.hpp"
#include "json.hpp"

namespace dagfm {

struct ParamCount {
  std::size_t embedding = 0;
  std::size_t interaction = 0;  // everything that is not an embedding table

  std::size_t total() const { return embedding + interaction; }
};

// Closed-form parameter counts from the spec alone.
ParamCount count_params(const ModelSpec& spec);

// FLOPs of one single-instance forward pass, one multiplication or addition
// each counting 1. Embedding lookup is a copy and costs nothing.
//
//   DAGFM, per layer and enabled pair:   basic d | inner 2d | kernel d²+d mults, d(d-1) adds
//                                        outer 3d mults, d-1 adds
//         per layer and node with k sources: (k-1)d adds
//         pooling: (L+1) m (d-1) adds;  head: m(L+1) mults, m(L+1) adds (incl. bias)
//   CIN, per layer: H_{k-1} m d (Hadamard) + H_k H_{k-1} m d mults,
//         H_k (H_{k-1} m - 1) d adds, H_k (d-1) pooling adds; head ΣH mults, ΣH adds
//   CrossNet, per layer with n = md: n²+n mults, n²+n adds; head n mults, n adds
//   FwFM/FmFM: per pair φ then pooling (d-1 adds), P-1 adds across pairs,
//         md mults and md-1 adds for the linear term, 2 adds for the sums and bias
//   Dense layer in -> out: in·out mults, out·in adds (bias included)
FlopCount count_flops(const ModelSpec& spec);

struct LatencyStats {
  std::size_t iterations = 0;
  double mean_us = 0.0;
  double median_us = 0.0;
  double p99_us = 0.0;
};

inline constexpr std::size_t kDefaultLatencyIterations = 1000;

// Times single-instance forward passes of `row` on the calling thread after
// `warmup` untimed passes. iterations = 0 is a ConfigError.
LatencyStats bench_latency(const Model& model, std::span<const FieldIndex> row, std::size_t iterations,
                           std::size_t warmup = 100);

nlohmann::json to_json(const LatencyStats& stats);

}  // namespace dagfm
