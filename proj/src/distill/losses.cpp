#include "dagfm/distill/losses.hpp"

#include "dagfm/metrics/evaluation.hpp"
#include "dagfm/numcore/errors.hpp"

namespace dagfm {

std::string to_string(KdSpace space) { return space == KdSpace::logit ? "logit" : "probability"; }

KdSpace parse_kd_space(const std::string& text) {
  if (text == "logit") return KdSpace::logit;
  if (text == "probability") return KdSpace::probability;
  throw ConfigError("unknown KD space '" + text + "' (expected logit or probability)");
}

double kd_loss(std::span<const double> teacher, std::span<const double> student, KdSpace space) {
  if (teacher.size() != student.size()) {
    throw ShapeError("kd_loss: " + std::to_string(teacher.size()) + " teacher outputs vs " +
                     std::to_string(student.size()) + " student outputs");
  }
  if (teacher.empty()) throw ShapeError("kd_loss needs at least one instance");
  double total = 0.0;
  for (std::size_t n = 0; n < teacher.size(); ++n) {
    const double diff = space == KdSpace::logit ? teacher[n] - student[n] : sigmoid(teacher[n]) - sigmoid(student[n]);
    total += diff * diff;
  }
  return total / static_cast<double>(teacher.size());
}

double kd_loss_gradient(double teacher_logit, double student_logit, KdSpace space) {
  if (space == KdSpace::logit) return 2.0 * (student_logit - teacher_logit);
  const double s = sigmoid(student_logit);
  return 2.0 * (s - sigmoid(teacher_logit)) * s * (1.0 - s);
}

double ctr_loss(std::span<const double> labels, std::span<const double> probabilities) {
  return logloss(labels, probabilities);
}

double total_loss(double kd, double ctr, double alpha, double beta) {
  if (alpha < 0.0 || beta < 0.0) throw ConfigError("loss weights must be nonnegative");
  return alpha * kd + beta * ctr;
}

}  // namespace dagfm
