#pragma once

#include <span>
#include <vector>

#include "crflearn/mean_field.hpp"
#include "crflearn/model.hpp"

namespace crflearn {

/// Pieces of the minimized training objective
///   total = -cd_sum + l1 + l2.
struct ObjectiveValue {
  double cd_sum = 0.0;  // sum of per-instance contrastive-divergence terms
  double l1 = 0.0;      // lambda1 * ||w||_1
  double l2 = 0.0;      // lambda2 * ||w||^2 / 2
  double total = 0.0;
};

/// Per-instance contrastive-divergence term
///   w'<f>_{q0} + H(q0) - w'<f>_{q1} - H(q1).
double cd_term(const Model& model, const Marginals& q0, const Marginals& q1);

/// Gradient of the minimized smooth term -sum_i cd over the active features:
/// component r is sum_i [ <f_r>_{q1^i} - <f_r>_{q0^i} ]. The L2 contribution
/// (lambda2 * w) is added by the caller when assembling the smooth gradient;
/// L1 is handled inside the optimizer.
std::vector<double> active_gradient(const Model& model, std::span<const Marginals> q0s,
                                    std::span<const Marginals> q1s);

ObjectiveValue objective_value(const Model& model, double cd_sum, double lambda1, double lambda2);

double l1_norm(std::span<const double> v);
double l2_squared(std::span<const double> v);

}  // namespace crflearn
