#pragma once

#include <span>
#include <string>

namespace dagfm {

// Where teacher and student outputs are compared.
enum class KdSpace { logit, probability };

std::string to_string(KdSpace space);
KdSpace parse_kd_space(const std::string& text);

// Mean squared difference of teacher and student outputs, (1/N) Σ (T - S)².
// Inputs are logits; in probability space both pass through the sigmoid first.
double kd_loss(std::span<const double> teacher, std::span<const double> student, KdSpace space = KdSpace::logit);

// d kd_loss(one instance) / d student logit.
double kd_loss_gradient(double teacher_logit, double student_logit, KdSpace space = KdSpace::logit);

// Mean binary cross-entropy on clipped probabilities; labels must be 0 or 1.
double ctr_loss(std::span<const double> labels, std::span<const double> probabilities);

// α·kd + β·ctr with nonnegative weights.
double total_loss(double kd, double ctr, double alpha, double beta);

}  // namespace dagfm
