#include "crflearn/objective.hpp"

#include <cmath>
#include <stdexcept>

namespace crflearn {

double cd_term(const Model& model, const Marginals& q0, const Marginals& q1) {
  double linear0 = 0.0, linear1 = 0.0;
  for (std::size_t r = 0; r < model.feature_count(); ++r) {
    const double w = model.weight(r);
    if (w == 0.0) continue;
    double p0 = 1.0, p1 = 1.0;
    for (const State& st : model.feature_states(r)) {
      p0 *= q0.prob(st.variable, st.value);
      p1 *= q1.prob(st.variable, st.value);
    }
    linear0 += w * p0;
    linear1 += w * p1;
  }
  // grouped as differences so identical belief pairs give exactly zero
  return (linear0 - linear1) + (entropy(q0) - entropy(q1));
}

std::vector<double> active_gradient(const Model& model, std::span<const Marginals> q0s,
                                    std::span<const Marginals> q1s) {
  if (q0s.size() != q1s.size()) throw std::invalid_argument("q0/q1 must be aligned by instance");
  std::vector<double> grad(model.feature_count(), 0.0);
  for (std::size_t i = 0; i < q0s.size(); ++i) {
    for (std::size_t r = 0; r < grad.size(); ++r) {
      double p0 = 1.0, p1 = 1.0;
      for (const State& st : model.feature_states(r)) {
        p0 *= q0s[i].prob(st.variable, st.value);
        p1 *= q1s[i].prob(st.variable, st.value);
      }
      grad[r] += p1 - p0;
    }
  }
  return grad;
}

ObjectiveValue objective_value(const Model& model, double cd_sum, double lambda1,
                               double lambda2) {
  ObjectiveValue v;
  v.cd_sum = cd_sum;
  v.l1 = lambda1 * l1_norm(model.weights());
  v.l2 = lambda2 * l2_squared(model.weights()) / 2.0;
  v.total = -v.cd_sum + v.l1 + v.l2;
  return v;
}

double l1_norm(std::span<const double> v) {
  double s = 0.0;
  for (double x : v) s += std::abs(x);
  return s;
}

double l2_squared(std::span<const double> v) {
  double s = 0.0;
  for (double x : v) s += x * x;
  return s;
}

}  // namespace crflearn
