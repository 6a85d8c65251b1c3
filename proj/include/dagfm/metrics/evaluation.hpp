#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "dagfm/data/dataset.hpp"
#include "dagfm/interactions/model.hpp"

namespace dagfm {

inline constexpr double kProbabilityClip = 1e-7;

double sigmoid(double x);

// Area under the ROC curve via rank sums; tied scores share their average
// rank, which counts a tied positive/negative pair as 0.5. Throws
// UndefinedMetricError unless both classes are present.
double auc(std::span<const double> labels, std::span<const double> scores);

// Mean binary cross-entropy with probabilities clipped to [1e-7, 1 - 1e-7].
// Labels must be exactly 0 or 1.
double logloss(std::span<const double> labels, std::span<const double> probabilities);

std::vector<double> labels_of(const Dataset& data);

// Worker count for evaluation sharding: DAGFM_THREADS if set and positive,
// otherwise 1.
std::size_t eval_threads();

// Logits for every row. Rows are split into contiguous shards, one per
// worker; each result lands in its own slot, so the output does not depend on
// the worker count.
std::vector<double> predict_logits(const Model& model, const Dataset& data, std::size_t threads = eval_threads());

struct EvalResult {
  double auc = 0.0;
  double logloss = 0.0;
};

EvalResult evaluate_logits(std::span<const double> labels, std::span<const double> logits);
EvalResult evaluate(const Model& model, const Dataset& data, std::size_t threads = eval_threads());

}  // namespace dagfm
