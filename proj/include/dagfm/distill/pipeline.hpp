#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "dagfm/data/dataset.hpp"
#include "dagfm/distill/losses.hpp"
#include "dagfm/interactions/model.hpp"
#include "json.hpp"

namespace dagfm {

struct StageSettings {
  std::size_t epochs = 10;
  double lr = 1e-3;
  std::size_t batch_size = 256;
  // Epochs without a validation-AUC improvement before stopping; 0 disables.
  std::size_t patience = 3;
  double l2 = 1e-5;
};

/// Everything the three stages need besides data.
struct DistillPlan {
  ModelSpec teacher;
  std::string teacher_checkpoint;
  ModelSpec student;
  double alpha = 1.0;
  double beta = 10.0;
  KdSpace kd_space = KdSpace::logit;
  StageSettings teacher_stage;
  StageSettings distill_stage;
  StageSettings finetune_stage;
  std::uint64_t seed = 42;

  // α, β ≥ 0 and not both zero; stage settings sane; specs valid.
  void validate() const;
};

/// One line of a stage report. Epoch 0 is the state before any update.
struct EpochRecord {
  std::size_t epoch = 0;
  double loss = 0.0;  // mean training objective over the epoch
  double val_auc = 0.0;
  double val_logloss = 0.0;
  // Distillation only: mean training KD term over the epoch, and KD on validation.
  std::optional<double> kd_loss;
  std::optional<double> val_kd_loss;

  nlohmann::json to_json() const;
};

struct TrainReport {
  std::string stage;
  std::vector<EpochRecord> epochs;
  // argmax of validation AUC; the model holds these parameters on return.
  std::size_t best_epoch = 0;
  std::string checkpoint;
  double wall_seconds = 0.0;
  bool diverged = false;
  std::string divergence_message;

  const EpochRecord& best() const { return epochs.at(best_epoch); }
  // One JSON object per epoch, newline-terminated. No timings, so reruns
  // produce identical bytes.
  std::string to_jsonl() const;
};

using EpochSink = std::function<void(const EpochRecord&)>;

/// Per-instance objective: the loss and its derivative w.r.t. the logit of
/// training row `row` (an index into the training set).
struct Objective {
  std::function<double(std::size_t row, double logit)> loss;
  std::function<double(std::size_t row, double logit)> gradient;
  // Unweighted KD term, when the objective has one.
  std::function<double(std::size_t row, double logit)> kd;
};

Objective ctr_objective(const Dataset& train, double weight = 1.0);
Objective distill_objective(const Dataset& train, std::span<const double> teacher_logits, double alpha,
                            double beta, KdSpace space);

// Mini-batch Adam over `train` with L2 on every trainable parameter, epoch-0
// evaluation, early stopping on validation AUC and best-epoch restore. A
// non-finite loss or gradient ends the stage with `diverged` set.
// `val_teacher_logits`, when non-empty, adds val_kd_loss to each record.
TrainReport run_stage(const std::string& name, Model& model, const Dataset& train, const Dataset& validation,
                      const Objective& objective, const StageSettings& settings, std::uint64_t seed,
                      std::span<const double> val_teacher_logits = {}, KdSpace kd_space = KdSpace::logit,
                      const EpochSink& sink = {});

// Teacher stage: CTR loss only, embeddings trained jointly.
TrainReport train_teacher(Model& teacher, const DatasetSplit& data, const StageSettings& settings,
                          std::uint64_t seed, const EpochSink& sink = {});

// Copies the teacher's embedding tables into the student (ShapeError on any
// mismatch) and marks them frozen.
void share_embeddings(const Model& teacher, Model& student);

// Distillation stage: shared frozen embeddings, teacher untouched, loss
// α·kd + β·ctr against precomputed teacher logits.
TrainReport distill_student(const Model& teacher, Model& student, const DatasetSplit& data, const DistillPlan& plan,
                            const EpochSink& sink = {});

// Fine-tuning stage: every student parameter trainable, CTR loss only.
TrainReport finetune_student(Model& student, const DatasetSplit& data, const StageSettings& settings,
                             std::uint64_t seed, const EpochSink& sink = {});

}  // namespace dagfm
