#include "dagfm/metrics/efficiency.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>
#include <vector>

#include "dagfm/numcore/errors.hpp"
#include "dagfm/teachers/baselines.hpp"

namespace dagfm {

namespace {

// Enabled sources per target node, self-pair included.
std::vector<std::size_t> dag_in_degrees(const ModelSpec& spec) {
  const std::size_t m = spec.num_fields();
  std::vector<std::size_t> deg(m);
  for (std::size_t i = 0; i < m; ++i) {
    deg[i] = i + 1;
    for (const DagEdge& e : spec.removed_edges) {
      if (e.to == i && e.from < i) --deg[i];
    }
  }
  return deg;
}

std::size_t dag_pairs(const ModelSpec& spec) {
  const auto deg = dag_in_degrees(spec);
  return std::accumulate(deg.begin(), deg.end(), std::size_t{0});
}

std::vector<std::size_t> dense_widths(std::size_t in, const std::vector<std::size_t>& hidden) {
  std::vector<std::size_t> w{in};
  w.insert(w.end(), hidden.begin(), hidden.end());
  w.push_back(1);
  return w;
}

std::size_t dense_params(const std::vector<std::size_t>& widths) {
  std::size_t n = 0;
  for (std::size_t k = 0; k + 1 < widths.size(); ++k) n += widths[k] * widths[k + 1] + widths[k + 1];
  return n;
}

FlopCount dense_flops(const std::vector<std::size_t>& widths) {
  FlopCount f;
  for (std::size_t k = 0; k + 1 < widths.size(); ++k) {
    f.mults += widths[k] * widths[k + 1];
    f.adds += widths[k + 1] * widths[k];  // in-1 accumulations plus the bias
  }
  return f;
}

std::size_t dagfm_tower_input(const ModelSpec& spec) {
  const std::size_t layers = spec.plus_states == PlusStates::all_layers ? spec.depth + 1 : 1;
  return layers * spec.num_fields() * spec.embed_dim;
}

}  // namespace

ParamCount count_params(const ModelSpec& spec) {
  spec.validate();
  const std::size_t m = spec.num_fields();
  const std::size_t d = spec.embed_dim;
  const std::size_t L = spec.depth;
  ParamCount c;
  for (std::size_t rows : spec.vocab_rows) c.embedding += rows * d;

  switch (spec.kind) {
    case ModelKind::dagfm:
    case ModelKind::dagfm_plus: {
      const std::size_t P = dag_pairs(spec);
      std::size_t per_pair = 0;
      switch (spec.fn) {
        case InteractionFn::basic_inner: per_pair = 0; break;
        case InteractionFn::inner: per_pair = d; break;
        case InteractionFn::kernel: per_pair = d * d; break;
        case InteractionFn::outer: per_pair = 2 * d; break;
      }
      c.interaction = L * P * per_pair + m * (L + 1) + 1;
      if (spec.kind == ModelKind::dagfm_plus) {
        c.interaction += dense_params(dense_widths(dagfm_tower_input(spec), spec.mlp_hidden));
      }
      break;
    }
    case ModelKind::cin: {
      std::size_t prev = m;
      std::size_t pooled = 0;
      for (std::size_t h : spec.cin_sizes()) {
        c.interaction += h * prev * m;
        pooled += h;
        prev = h;
      }
      c.interaction += pooled + 1;
      break;
    }
    case ModelKind::crossnet: {
      const std::size_t n = m * d;
      c.interaction = L * (n * n + n) + n + 1;
      break;
    }
    case ModelKind::fwfm:
    case ModelKind::fmfm: {
      const std::size_t P = m * (m - 1) / 2;
      c.interaction = P * (spec.kind == ModelKind::fwfm ? d : d * d) + m * d + 1;
      break;
    }
    case ModelKind::tiny_mlp: {
      const auto& hidden = spec.mlp_hidden.empty() ? kTinyMlpHidden : spec.mlp_hidden;
      c.interaction = dense_params(dense_widths(m * d, hidden));
      break;
    }
  }
  return c;
}

FlopCount count_flops(const ModelSpec& spec) {
  spec.validate();
  const std::size_t m = spec.num_fields();
  const std::size_t d = spec.embed_dim;
  const std::size_t L = spec.depth;
  FlopCount f;

  switch (spec.kind) {
    case ModelKind::dagfm:
    case ModelKind::dagfm_plus: {
      const std::size_t P = dag_pairs(spec);
      std::size_t pm = 0;
      std::size_t pa = 0;
      switch (spec.fn) {
        case InteractionFn::basic_inner: pm = d; break;
        case InteractionFn::inner: pm = 2 * d; break;
        case InteractionFn::kernel: pm = d * d + d; pa = d * (d - 1); break;
        case InteractionFn::outer: pm = 3 * d; pa = d - 1; break;
      }
      f.mults += L * P * pm;
      f.adds += L * P * pa;
      for (std::size_t k : dag_in_degrees(spec)) f.adds += L * (k - 1) * d;
      const std::size_t pooled = m * (L + 1);
      f.adds += pooled * (d - 1);
      f.mults += pooled;
      f.adds += pooled;
      if (spec.kind == ModelKind::dagfm_plus) {
        const FlopCount tower = dense_flops(dense_widths(dagfm_tower_input(spec), spec.mlp_hidden));
        f.mults += tower.mults;
        f.adds += tower.adds + 1;
      }
      break;
    }
    case ModelKind::cin: {
      std::size_t prev = m;
      std::size_t pooled = 0;
      for (std::size_t h : spec.cin_sizes()) {
        const std::size_t pairs = prev * m;
        f.mults += pairs * d + h * pairs * d;
        f.adds += h * (pairs - 1) * d + h * (d - 1);
        pooled += h;
        prev = h;
      }
      f.mults += pooled;
      f.adds += pooled;
      break;
    }
    case ModelKind::crossnet: {
      const std::size_t n = m * d;
      f.mults += L * (n * n + n) + n;
      f.adds += L * (n * n + n) + n;
      break;
    }
    case ModelKind::fwfm:
    case ModelKind::fmfm: {
      const std::size_t P = m * (m - 1) / 2;
      if (spec.kind == ModelKind::fwfm) {
        f.mults += P * 2 * d;
      } else {
        f.mults += P * (d * d + d);
        f.adds += P * d * (d - 1);
      }
      f.adds += P * (d - 1) + (P - 1);
      f.mults += m * d;
      f.adds += m * d - 1 + 2;
      break;
    }
    case ModelKind::tiny_mlp: {
      const auto& hidden = spec.mlp_hidden.empty() ? kTinyMlpHidden : spec.mlp_hidden;
      f = dense_flops(dense_widths(m * d, hidden));
      break;
    }
  }
  return f;
}

LatencyStats bench_latency(const Model& model, std::span<const FieldIndex> row, std::size_t iterations,
                           std::size_t warmup) {
  if (iterations == 0) throw ConfigError("latency benchmark needs at least one iteration");
  using clock = std::chrono::steady_clock;
  volatile double sink = 0.0;
  for (std::size_t k = 0; k < warmup; ++k) sink = sink + model.logit(row);
  std::vector<double> us(iterations);
  for (std::size_t k = 0; k < iterations; ++k) {
    const auto t0 = clock::now();
    sink = sink + model.logit(row);
    const auto t1 = clock::now();
    us[k] = std::chrono::duration<double, std::micro>(t1 - t0).count();
  }
  LatencyStats s;
  s.iterations = iterations;
  s.mean_us = std::accumulate(us.begin(), us.end(), 0.0) / static_cast<double>(iterations);
  std::sort(us.begin(), us.end());
  s.median_us = iterations % 2 == 1 ? us[iterations / 2] : 0.5 * (us[iterations / 2 - 1] + us[iterations / 2]);
  const std::size_t p99 = static_cast<std::size_t>(std::ceil(0.99 * static_cast<double>(iterations))) - 1;
  s.p99_us = us[std::min(p99, iterations - 1)];
  return s;
}

nlohmann::json to_json(const LatencyStats& stats) {
  return {{"mean", stats.mean_us}, {"median", stats.median_us}, {"p99", stats.p99_us}, {"iterations", stats.iterations}};
}

}  // namespace dagfm
