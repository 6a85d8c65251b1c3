#include "dagfm/metrics/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <numeric>
#include <string>
#include <thread>

#include "dagfm/numcore/errors.hpp"

namespace dagfm {

double sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

namespace {

void check_labels(std::span<const double> labels) {
  for (std::size_t n = 0; n < labels.size(); ++n) {
    if (labels[n] != 0.0 && labels[n] != 1.0) {
      throw ConfigError("label at position " + std::to_string(n) + " is " + std::to_string(labels[n]) +
                        ", expected 0 or 1");
    }
  }
}

}  // namespace

double auc(std::span<const double> labels, std::span<const double> scores) {
  if (labels.size() != scores.size()) throw ShapeError("auc: labels and scores differ in length");
  check_labels(labels);
  const std::size_t n = labels.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });

  double positive_rank_sum = 0.0;
  std::size_t positives = 0;
  for (std::size_t lo = 0; lo < n;) {
    std::size_t hi = lo + 1;
    while (hi < n && scores[order[hi]] == scores[order[lo]]) ++hi;
    // 1-based ranks lo+1 .. hi share their mean.
    const double rank = 0.5 * static_cast<double>(lo + 1 + hi);
    for (std::size_t k = lo; k < hi; ++k) {
      if (labels[order[k]] == 1.0) {
        positive_rank_sum += rank;
        ++positives;
      }
    }
    lo = hi;
  }
  const std::size_t negatives = n - positives;
  if (positives == 0 || negatives == 0) throw UndefinedMetricError("AUC needs at least one positive and one negative");
  const double np = static_cast<double>(positives);
  return (positive_rank_sum - np * (np + 1.0) / 2.0) / (np * static_cast<double>(negatives));
}

double logloss(std::span<const double> labels, std::span<const double> probabilities) {
  if (labels.size() != probabilities.size()) throw ShapeError("logloss: labels and probabilities differ in length");
  if (labels.empty()) throw UndefinedMetricError("logloss of an empty set");
  check_labels(labels);
  double total = 0.0;
  for (std::size_t n = 0; n < labels.size(); ++n) {
    const double p = std::clamp(probabilities[n], kProbabilityClip, 1.0 - kProbabilityClip);
    total -= labels[n] == 1.0 ? std::log(p) : std::log(1.0 - p);
  }
  return total / static_cast<double>(labels.size());
}

std::vector<double> labels_of(const Dataset& data) {
  return std::vector<double>(data.labels().begin(), data.labels().end());
}

std::size_t eval_threads() {
  const char* env = std::getenv("DAGFM_THREADS");
  if (env == nullptr) return 1;
  char* end = nullptr;
  const long v = std::strtol(env, &end, 10);
  if (end == env || *end != '\0' || v < 1) return 1;
  return static_cast<std::size_t>(v);
}

std::vector<double> predict_logits(const Model& model, const Dataset& data, std::size_t threads) {
  std::vector<double> out(data.size());
  threads = std::max<std::size_t>(1, std::min(threads, data.size()));
  auto work = [&](std::size_t lo, std::size_t hi) {
    for (std::size_t k = lo; k < hi; ++k) out[k] = model.logit(data.row(k));
  };
  if (threads <= 1) {
    work(0, data.size());
    return out;
  }
  std::vector<std::thread> pool;
  std::vector<std::exception_ptr> errors(threads);
  const std::size_t chunk = (data.size() + threads - 1) / threads;
  for (std::size_t t = 0; t < threads; ++t) {
    const std::size_t lo = std::min(data.size(), t * chunk);
    const std::size_t hi = std::min(data.size(), lo + chunk);
    pool.emplace_back([&, t, lo, hi] {
      try {
        work(lo, hi);
      } catch (...) {
        errors[t] = std::current_exception();
      }
    });
  }
  for (auto& th : pool) th.join();
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  return out;
}

EvalResult evaluate_logits(std::span<const double> labels, std::span<const double> logits) {
  std::vector<double> probs(logits.size());
  std::transform(logits.begin(), logits.end(), probs.begin(), sigmoid);
  return {auc(labels, logits), logloss(labels, probs)};
}

EvalResult evaluate(const Model& model, const Dataset& data, std::size_t threads) {
  const std::vector<double> logits = predict_logits(model, data, threads);
  const std::vector<double> labels = labels_of(data);
  return evaluate_logits(labels, logits);
}

}  // namespace dagfm
