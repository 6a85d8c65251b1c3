#include "dagfm/distill/pipeline.hpp"

#include <chrono>
#include <cmath>
#include <sstream>

#include "dagfm/metrics/evaluation.hpp"
#include "dagfm/numcore/adam.hpp"
#include "dagfm/numcore/errors.hpp"

namespace dagfm {

namespace {

double bce(double label, double logit) {
  const double p = std::clamp(sigmoid(logit), kProbabilityClip, 1.0 - kProbabilityClip);
  return label == 1.0 ? -std::log(p) : -std::log(1.0 - p);
}

// Exact derivative of bce, including the flat clipped tails.
double bce_gradient(double label, double logit) {
  const double p = sigmoid(logit);
  if (p < kProbabilityClip || p > 1.0 - kProbabilityClip) return 0.0;
  return p - label;
}

std::uint64_t epoch_seed(std::uint64_t seed, std::size_t epoch) {
  return seed * 0x9E3779B97F4A7C15ULL + static_cast<std::uint64_t>(epoch);
}

void check_settings(const StageSettings& s, const std::string& stage) {
  if (s.batch_size == 0) throw ConfigError(stage + ": batch_size must be at least 1");
  if (!(s.lr >= 0.0) || !std::isfinite(s.lr)) throw ConfigError(stage + ": learning rate must be finite and >= 0");
  if (!(s.l2 >= 0.0) || !std::isfinite(s.l2)) throw ConfigError(stage + ": l2 must be finite and >= 0");
}

}  // namespace

void DistillPlan::validate() const {
  if (!(alpha >= 0.0) || !(beta >= 0.0)) throw ConfigError("alpha and beta must be nonnegative");
  if (alpha == 0.0 && beta == 0.0) throw ConfigError("alpha and beta cannot both be zero");
  check_settings(teacher_stage, "teacher stage");
  check_settings(distill_stage, "distill stage");
  check_settings(finetune_stage, "finetune stage");
  teacher.validate();
  student.validate();
}

nlohmann::json EpochRecord::to_json() const {
  nlohmann::json j{{"epoch", epoch}, {"loss", loss}, {"val_auc", val_auc}, {"val_logloss", val_logloss}};
  if (kd_loss) j["kd_loss"] = *kd_loss;
  if (val_kd_loss) j["val_kd_loss"] = *val_kd_loss;
  return j;
}

std::string TrainReport::to_jsonl() const {
  std::ostringstream os;
  for (const EpochRecord& r : epochs) os << r.to_json().dump() << "\n";
  return os.str();
}

Objective ctr_objective(const Dataset& train, double weight) {
  return {
      [&train, weight](std::size_t row, double logit) { return weight * bce(train.label(row), logit); },
      [&train, weight](std::size_t row, double logit) { return weight * bce_gradient(train.label(row), logit); },
  };
}

Objective distill_objective(const Dataset& train, std::span<const double> teacher_logits, double alpha,
                            double beta, KdSpace space) {
  if (teacher_logits.size() != train.size()) throw ShapeError("one teacher logit per training row is required");
  return {
      [&train, teacher_logits, alpha, beta, space](std::size_t row, double logit) {
        const double t = teacher_logits[row];
        const double diff = space == KdSpace::logit ? t - logit : sigmoid(t) - sigmoid(logit);
        return total_loss(diff * diff, bce(train.label(row), logit), alpha, beta);
      },
      [&train, teacher_logits, alpha, beta, space](std::size_t row, double logit) {
        return alpha * kd_loss_gradient(teacher_logits[row], logit, space) +
               beta * bce_gradient(train.label(row), logit);
      },
      [teacher_logits, space](std::size_t row, double logit) {
        const double t = teacher_logits[row];
        const double diff = space == KdSpace::logit ? t - logit : sigmoid(t) - sigmoid(logit);
        return diff * diff;
      },
  };
}

TrainReport run_stage(const std::string& name, Model& model, const Dataset& train, const Dataset& validation,
                      const Objective& objective, const StageSettings& settings, std::uint64_t seed,
                      std::span<const double> val_teacher_logits, KdSpace kd_space, const EpochSink& sink) {
  check_settings(settings, name);
  if (train.empty()) throw ConfigError(name + ": empty training set");
  const auto start = std::chrono::steady_clock::now();
  TrainReport report;
  report.stage = name;
  const std::vector<double> val_labels = labels_of(validation);

  const double inv_n = 1.0 / static_cast<double>(train.size());
  auto record = [&](std::size_t epoch, double loss, double kd) {
    EpochRecord r;
    r.epoch = epoch;
    r.loss = loss * inv_n;
    if (objective.kd) r.kd_loss = kd * inv_n;
    const std::vector<double> logits = predict_logits(model, validation);
    const EvalResult ev = evaluate_logits(val_labels, logits);
    r.val_auc = ev.auc;
    r.val_logloss = ev.logloss;
    if (!val_teacher_logits.empty()) r.val_kd_loss = kd_loss(val_teacher_logits, logits, kd_space);
    report.epochs.push_back(r);
    if (sink) sink(r);
    return r;
  };

  // Epoch 0: objective on the untouched model.
  double initial = 0.0;
  double initial_kd = 0.0;
  for (std::size_t k = 0; k < train.size(); ++k) {
    const double z = model.logit(train.row(k));
    initial += objective.loss(k, z);
    if (objective.kd) initial_kd += objective.kd(k, z);
  }
  record(0, initial, initial_kd);

  std::vector<Tensor> best = model.params().snapshot();
  double best_auc = report.epochs[0].val_auc;
  std::size_t stale = 0;
  Gradients grads = model.params().zero_gradients();

  try {
    for (std::size_t epoch = 1; epoch <= settings.epochs; ++epoch) {
      const BatchSchedule schedule(train.size(), settings.batch_size, epoch_seed(seed, epoch));
      double epoch_loss = 0.0;
      double epoch_kd = 0.0;
      for (std::size_t b = 0; b < schedule.num_batches(); ++b) {
        const auto rows = schedule.batch(b);
        const double scale = 1.0 / static_cast<double>(rows.size());
        grads.zero();
        for (std::size_t row : rows) {
          const double logit = model.logit_with_gradient(
              train.row(row), [&](double z) { return scale * objective.gradient(row, z); }, grads);
          const double loss = objective.loss(row, logit);
          if (!std::isfinite(loss)) {
            throw DivergenceError(name + ": non-finite loss at epoch " + std::to_string(epoch));
          }
          epoch_loss += loss;
          if (objective.kd) epoch_kd += objective.kd(row, logit);
        }
        add_l2_penalty(model.params(), grads, settings.l2);
        adam_step(model.params(), grads, settings.lr);
      }
      const EpochRecord r = record(epoch, epoch_loss, epoch_kd);
      if (r.val_auc > best_auc) {
        best_auc = r.val_auc;
        report.best_epoch = epoch;
        best = model.params().snapshot();
        stale = 0;
      } else if (settings.patience > 0 && ++stale >= settings.patience) {
        break;
      }
    }
  } catch (const DivergenceError& e) {
    report.diverged = true;
    report.divergence_message = e.what();
  }

  model.params().restore(best);
  report.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return report;
}

TrainReport train_teacher(Model& teacher, const DatasetSplit& data, const StageSettings& settings,
                          std::uint64_t seed, const EpochSink& sink) {
  teacher.params().set_all_trainable(true);
  return run_stage("teacher", teacher, data.train, data.validation, ctr_objective(data.train), settings, seed, {},
                   KdSpace::logit, sink);
}

void share_embeddings(const Model& teacher, Model& student) {
  const EmbeddingTable& te = teacher.embeddings();
  const EmbeddingTable& se = student.embeddings();
  if (te.num_fields() != se.num_fields() || te.dim() != se.dim()) {
    throw ShapeError("embedding tables differ: teacher has " + std::to_string(te.num_fields()) + " fields of d=" +
                     std::to_string(te.dim()) + ", student " + std::to_string(se.num_fields()) + " fields of d=" +
                     std::to_string(se.dim()));
  }
  for (std::size_t f = 0; f < te.num_fields(); ++f) {
    const Tensor& src = teacher.params().value(te.handle(f));
    Tensor& dst = student.params().value(se.handle(f));
    if (src.shape() != dst.shape()) {
      throw ShapeError("embedding table " + std::to_string(f) + " differs: teacher " + shape_to_string(src.shape()) +
                       ", student " + shape_to_string(dst.shape()));
    }
    dst = src;
    student.params().set_trainable(se.handle(f), false);
  }
}

TrainReport distill_student(const Model& teacher, Model& student, const DatasetSplit& data, const DistillPlan& plan,
                            const EpochSink& sink) {
  plan.validate();
  share_embeddings(teacher, student);
  // The teacher is const here; its logits are fixed for the whole stage.
  const std::vector<double> train_t = predict_logits(teacher, data.train);
  const std::vector<double> val_t = predict_logits(teacher, data.validation);
  return run_stage("distill", student, data.train, data.validation,
                   distill_objective(data.train, train_t, plan.alpha, plan.beta, plan.kd_space), plan.distill_stage,
                   plan.seed + 1, val_t, plan.kd_space, sink);
}

TrainReport finetune_student(Model& student, const DatasetSplit& data, const StageSettings& settings,
                             std::uint64_t seed, const EpochSink& sink) {
  student.params().set_all_trainable(true);
  student.params().reset_optimizer();
  return run_stage("finetune", student, data.train, data.validation, ctr_objective(data.train), settings, seed, {},
                   KdSpace::logit, sink);
}

}  // namespace dagfm
