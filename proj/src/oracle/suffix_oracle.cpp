#include "dagfm/oracle/suffix_oracle.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <random>
#include <sstream>

#include "dagfm/numcore/errors.hpp"

namespace dagfm::oracle {

namespace {

void check_bounds(std::size_t m, std::size_t t, std::size_t suffix) {
  if (m == 0 || t == 0) throw ConfigError("suffix sets need m >= 1 and t >= 1");
  if (m > kMaxFields || t > kMaxOrder) {
    throw ConfigError("the brute-force oracle is capped at m <= " + std::to_string(kMaxFields) +
                      " and t <= " + std::to_string(kMaxOrder));
  }
  if (suffix >= m) throw ConfigError("suffix " + std::to_string(suffix) + " is out of range for m = " + std::to_string(m));
}

void extend(std::vector<std::size_t>& prefix, std::size_t length, std::size_t suffix,
            std::vector<std::vector<std::size_t>>& out) {
  if (prefix.size() + 1 == length) {
    prefix.push_back(suffix);
    out.push_back(prefix);
    prefix.pop_back();
    return;
  }
  const std::size_t lo = prefix.empty() ? 0 : prefix.back();
  for (std::size_t j = lo; j <= suffix; ++j) {
    prefix.push_back(j);
    extend(prefix, length, suffix, out);
    prefix.pop_back();
  }
}

// phi written out directly so the oracle does not share arithmetic with the
// propagation code it checks.
std::vector<double> apply_edge(const DagfmModel& model, std::size_t layer, std::size_t pair,
                               const std::vector<double>& a, std::span<const double> b) {
  const std::size_t d = a.size();
  std::vector<double> out(d, 0.0);
  const ParamStore& ps = model.params();
  switch (model.spec().fn) {
    case InteractionFn::basic_inner:
      for (std::size_t k = 0; k < d; ++k) out[k] = a[k] * b[k];
      break;
    case InteractionFn::inner: {
      const double* w = ps.value(model.edge_weight(layer)).ptr() + pair * d;
      for (std::size_t k = 0; k < d; ++k) out[k] = w[k] * a[k] * b[k];
      break;
    }
    case InteractionFn::kernel: {
      const double* W = ps.value(model.edge_weight(layer)).ptr() + pair * d * d;
      for (std::size_t l = 0; l < d; ++l) {
        double s = 0.0;
        for (std::size_t k = 0; k < d; ++k) s += a[k] * W[k * d + l];
        out[l] = s * b[l];
      }
      break;
    }
    case InteractionFn::outer: {
      // Materialize W = pᵀq and use the kernel form.
      const double* p = ps.value(model.edge_weight(layer)).ptr() + pair * d;
      const double* q = ps.value(model.edge_weight_q(layer)).ptr() + pair * d;
      for (std::size_t l = 0; l < d; ++l) {
        double s = 0.0;
        for (std::size_t k = 0; k < d; ++k) s += a[k] * (p[k] * q[l]);
        out[l] = s * b[l];
      }
      break;
    }
  }
  return out;
}

double cell_deviation(std::span<const double> got, const std::vector<double>& want) {
  double worst = 0.0;
  for (std::size_t k = 0; k < want.size(); ++k) {
    worst = std::max(worst, std::abs(got[k] - want[k]) / (std::abs(want[k]) + kDenominatorFloor));
  }
  return worst;
}

}  // namespace

SuffixSet enumerate_suffix_set(std::size_t m, std::size_t t, std::size_t suffix) {
  check_bounds(m, t, suffix);
  SuffixSet set{t, suffix, {}};
  std::vector<std::size_t> prefix;
  extend(prefix, t, suffix, set.members);
  return set;
}

std::uint64_t suffix_set_size(std::size_t t, std::size_t suffix) {
  if (t == 0) throw ConfigError("suffix sets need t >= 1");
  // C(suffix + t - 1, t - 1), computed incrementally so every step is exact.
  std::uint64_t c = 1;
  for (std::uint64_t r = 1; r < t; ++r) c = c * (suffix + r) / r;
  return c;
}

std::vector<double> oracle_node_state(std::span<const double> emb, std::size_t m, std::size_t d, std::size_t t,
                                      std::size_t suffix) {
  if (emb.size() != m * d) throw ShapeError("embedding matrix must be m x d");
  const SuffixSet set = enumerate_suffix_set(m, t, suffix);
  std::vector<double> out(d, 0.0);
  for (const auto& tuple : set.members) {
    for (std::size_t k = 0; k < d; ++k) {
      double prod = 1.0;
      for (std::size_t j : tuple) prod *= emb[j * d + k];
      out[k] += prod;
    }
  }
  return out;
}

std::vector<double> oracle_path_state(const DagfmModel& model, std::span<const double> emb, std::size_t t,
                                      std::size_t suffix) {
  const std::size_t m = model.spec().num_fields();
  const std::size_t d = model.spec().embed_dim;
  if (!model.has_full_topology()) throw ConfigError("the path oracle requires the full DAG");
  if (emb.size() != m * d) throw ShapeError("embedding matrix must be m x d");
  if (t > model.num_layers() + 1) throw ConfigError("order exceeds the model depth");
  const SuffixSet set = enumerate_suffix_set(m, t, suffix);
  std::vector<double> out(d, 0.0);
  for (const auto& tuple : set.members) {
    std::vector<double> v(emb.begin() + tuple[0] * d, emb.begin() + (tuple[0] + 1) * d);
    for (std::size_t s = 1; s < tuple.size(); ++s) {
      const std::size_t pair = *model.pair_index(tuple[s - 1], tuple[s]);
      v = apply_edge(model, s - 1, pair, v, emb.subspan(tuple[s] * d, d));
    }
    for (std::size_t k = 0; k < d; ++k) out[k] += v[k];
  }
  return out;
}

DpReport check_dp_equivalence(const DagfmModel& model, std::span<const double> emb, DpReference reference) {
  if (!model.has_full_topology()) {
    throw ConfigError("DP equivalence only holds on the full DAG; this model has removed edges");
  }
  const std::size_t m = model.spec().num_fields();
  const std::size_t d = model.spec().embed_dim;
  const std::size_t depth = model.num_layers();
  const PropagationTrace trace = model.trace_embedded(emb);

  DpReport report;
  report.num_fields = m;
  report.dim = d;
  report.depth = depth;
  report.fn = model.spec().fn;
  report.reference = reference;
  report.deviation.assign(depth + 1, std::vector<double>(m, 0.0));
  for (std::size_t layer = 0; layer <= depth; ++layer) {
    for (std::size_t i = 0; i < m; ++i) {
      const std::vector<double> want = reference == DpReference::suffix_sum
                                           ? oracle_node_state(emb, m, d, layer + 1, i)
                                           : oracle_path_state(model, emb, layer + 1, i);
      const double dev = cell_deviation(trace.state(layer, i), want);
      report.deviation[layer][i] = dev;
      report.max_deviation = std::max(report.max_deviation, dev);
    }
  }
  report.pass = report.max_deviation < kPassThreshold;
  return report;
}

DpReport assert_dp_equivalence(InteractionFn fn, std::size_t m, std::size_t d, std::size_t depth,
                               std::uint64_t seed) {
  if (m < 1 || m > kMaxFields || depth + 1 > kMaxOrder) {
    throw ConfigError("the brute-force oracle is capped at m <= " + std::to_string(kMaxFields) +
                      " and depth <= " + std::to_string(kMaxOrder - 1));
  }
  ModelSpec spec;
  spec.kind = ModelKind::dagfm;
  spec.fn = fn;
  spec.vocab_rows.assign(m, 1);
  spec.embed_dim = d;
  spec.depth = depth;
  std::mt19937_64 rng(seed);
  DagfmModel model(spec, rng);

  DpReference reference = DpReference::suffix_sum;
  if (fn == InteractionFn::outer && d > 1) {
    reference = DpReference::weighted_paths;
  } else {
    model.set_identity_weights();
  }

  std::normal_distribution<double> normal(0.0, 1.0);
  std::vector<double> emb(m * d);
  for (double& v : emb) v = normal(rng);
  return check_dp_equivalence(model, emb, reference);
}

std::string format_report(const DpReport& report) {
  std::ostringstream os;
  os << "fn=" << to_string(report.fn) << " m=" << report.num_fields << " d=" << report.dim
     << " depth=" << report.depth
     << " reference=" << (report.reference == DpReference::suffix_sum ? "suffix-sum" : "weighted-paths") << "\n";
  char buf[32];
  os << "order";
  for (std::size_t i = 0; i < report.num_fields; ++i) os << "  node" << i << "     ";
  os << "\n";
  for (std::size_t layer = 0; layer < report.deviation.size(); ++layer) {
    os << "  " << layer + 1 << "  ";
    for (double dev : report.deviation[layer]) {
      std::snprintf(buf, sizeof buf, "  %.3e", dev);
      os << buf;
    }
    os << "\n";
  }
  std::snprintf(buf, sizeof buf, "%.3e", report.max_deviation);
  os << "max deviation " << buf << (report.pass ? " PASS" : " FAIL") << "\n";
  return os.str();
}

double outer_kernel_propagation_deviation(std::size_t m, std::size_t d, std::size_t depth, std::uint64_t seed) {
  ModelSpec spec;
  spec.kind = ModelKind::dagfm;
  spec.fn = InteractionFn::outer;
  spec.vocab_rows.assign(m, 1);
  spec.embed_dim = d;
  spec.depth = depth;
  std::mt19937_64 rng(seed);
  DagfmModel outer(spec, rng);
  spec.fn = InteractionFn::kernel;
  DagfmModel kernel(spec, rng);

  for (std::size_t t = 0; t < depth; ++t) {
    const Tensor& p = outer.params().value(outer.edge_weight(t));
    const Tensor& q = outer.params().value(outer.edge_weight_q(t));
    Tensor& W = kernel.params().value(kernel.edge_weight(t));
    for (std::size_t pair = 0; pair < outer.num_pairs(); ++pair) {
      for (std::size_t k = 0; k < d; ++k) {
        for (std::size_t l = 0; l < d; ++l) W[(pair * d + k) * d + l] = p[pair * d + k] * q[pair * d + l];
      }
    }
  }

  std::normal_distribution<double> normal(0.0, 1.0);
  std::vector<double> emb(m * d);
  for (double& v : emb) v = normal(rng);
  const PropagationTrace a = outer.trace_embedded(emb);
  const PropagationTrace b = kernel.trace_embedded(emb);
  double worst = 0.0;
  for (std::size_t n = 0; n < a.states.size(); ++n) {
    worst = std::max(worst, std::abs(a.states[n] - b.states[n]) / (std::abs(b.states[n]) + kDenominatorFloor));
  }
  return worst;
}

std::vector<Polynomial> symbolic_states(const DagfmModel& model, std::size_t t, std::size_t k) {
  const ModelSpec& spec = model.spec();
  if (spec.fn != InteractionFn::basic_inner && spec.fn != InteractionFn::inner) {
    throw ConfigError("symbolic expansion supports the basic-inner and inner functions only");
  }
  if (k >= spec.embed_dim) throw ConfigError("coordinate out of range");
  if (t > model.num_layers()) throw ConfigError("state layer exceeds the model depth");
  const std::size_t m = spec.num_fields();
  const std::size_t d = spec.embed_dim;

  std::vector<Polynomial> states(m);
  for (std::size_t i = 0; i < m; ++i) states[i][Monomial{i}] = 1.0;
  for (std::size_t layer = 0; layer < t; ++layer) {
    std::vector<Polynomial> next(m);
    for (std::size_t i = 0; i < m; ++i) {
      for (const auto& src : model.sources(i)) {
        double w = 1.0;
        if (spec.fn == InteractionFn::inner) w = model.params().value(model.edge_weight(layer))[src.pair * d + k];
        for (const auto& [mono, coef] : states[src.field]) {
          Monomial grown = mono;
          grown.push_back(i);
          std::sort(grown.begin(), grown.end());
          next[i][grown] += coef * w;
        }
      }
    }
    states = std::move(next);
  }
  return states;
}

double path_weight(const DagfmModel& model, std::span<const std::size_t> tuple, std::size_t k) {
  const ModelSpec& spec = model.spec();
  if (tuple.empty()) throw ConfigError("empty tuple");
  if (tuple.size() > model.num_layers() + 1) throw ConfigError("tuple longer than the model depth allows");
  double w = 1.0;
  for (std::size_t s = 1; s < tuple.size(); ++s) {
    const auto pair = model.pair_index(tuple[s - 1], tuple[s]);
    if (!pair) return 0.0;
    if (spec.fn == InteractionFn::inner) w *= model.params().value(model.edge_weight(s - 1))[*pair * spec.embed_dim + k];
  }
  return w;
}

}  // namespace dagfm::oracle
