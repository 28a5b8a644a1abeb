#include "crflearn/mean_field.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace crflearn {

Marginals::Marginals(const VariableSchema& schema)
    : cardinalities_(schema.cardinalities()),
      clamped_(schema.variable_count(), 0) {
  offsets_.reserve(cardinalities_.size());
  int total = 0;
  for (int c : cardinalities_) {
    offsets_.push_back(total);
    total += c;
  }
  probs_.resize(total);
  for (int k = 0; k < variable_count(); ++k) {
    const double u = 1.0 / cardinalities_[k];
    for (int v = 0; v < cardinalities_[k]; ++v) probs_[offsets_[k] + v] = u;
  }
}

void Marginals::clamp(int variable, int value) {
  auto d = mutable_dist(variable);
  std::fill(d.begin(), d.end(), 0.0);
  d[value] = 1.0;
  clamped_[variable] = 1;
}

void Marginals::unclamp_all() { std::fill(clamped_.begin(), clamped_.end(), 0); }

void Marginals::set_dist(int variable, std::span<const double> dist) {
  auto d = mutable_dist(variable);
  if (dist.size() != d.size()) throw std::invalid_argument("distribution length mismatch");
  std::copy(dist.begin(), dist.end(), d.begin());
  clamped_[variable] = 0;
}

namespace {

// Scores for variable k (log domain), then softmax with max subtraction.
void update_variable_into(const Model& model, const Marginals& beliefs, int k,
                          std::span<double> out) {
  const int card = beliefs.cardinality(k);
  for (int v = 0; v < card; ++v) {
    double score = 0.0;
    for (std::int32_t r : model.incident(k, v)) {
      double term = model.weight(r);
      for (const State& st : model.feature_states(r)) {
        if (st.variable == k) continue;
        term *= beliefs.prob(st.variable, st.value);
      }
      score += term;
    }
    out[v] = score;
  }
  double hi = out[0];
  for (int v = 1; v < card; ++v) hi = std::max(hi, out[v]);
  double z = 0.0;
  for (int v = 0; v < card; ++v) {
    out[v] = std::exp(out[v] - hi);
    z += out[v];
  }
  for (int v = 0; v < card; ++v) out[v] /= z;
}

// One full ascending sweep over the free variables; returns the max per-entry
// change. Updates are Gauss-Seidel: later variables see earlier new values.
double sweep(const Model& model, Marginals& beliefs, std::vector<double>& scratch) {
  double max_change = 0.0;
  for (int k = 0; k < beliefs.variable_count(); ++k) {
    if (beliefs.clamped(k)) continue;
    const int card = beliefs.cardinality(k);
    std::span<double> fresh(scratch.data(), card);
    update_variable_into(model, beliefs, k, fresh);
    auto d = beliefs.mutable_dist(k);
    for (int v = 0; v < card; ++v) {
      max_change = std::max(max_change, std::abs(fresh[v] - d[v]));
      d[v] = fresh[v];
    }
  }
  return max_change;
}

int max_cardinality(const Marginals& beliefs) {
  int c = 0;
  for (int k = 0; k < beliefs.variable_count(); ++k) c = std::max(c, beliefs.cardinality(k));
  return c;
}

}  // namespace

std::vector<double> update_variable(const Model& model, const Marginals& beliefs, int k) {
  if (beliefs.clamped(k)) throw std::invalid_argument("cannot update a clamped variable");
  std::vector<double> out(beliefs.cardinality(k));
  update_variable_into(model, beliefs, k, out);
  return out;
}

MfResult mf_converge(const Model& model, const Instance& instance, const MfOptions& options) {
  const VariableSchema& schema = model.schema();
  if (static_cast<int>(instance.values.size()) != schema.variable_count()) {
    throw std::invalid_argument("instance does not match model schema");
  }
  MfResult result;
  result.beliefs = Marginals(schema);
  bool any_hidden = false;
  for (int k = 0; k < schema.variable_count(); ++k) {
    if (instance.is_hidden(k)) {
      any_hidden = true;
    } else {
      result.beliefs.clamp(k, instance.values[k]);
    }
  }
  if (!any_hidden) return result;

  std::vector<double> scratch(max_cardinality(result.beliefs));
  if (options.track_free_energy) {
    result.sweep_free_energy.push_back(free_energy(model, result.beliefs));
  }
  result.converged = false;
  while (result.sweeps < options.max_sweeps) {
    const double change = sweep(model, result.beliefs, scratch);
    ++result.sweeps;
    if (options.track_free_energy) {
      result.sweep_free_energy.push_back(free_energy(model, result.beliefs));
    }
    if (change < options.tol) {
      result.converged = true;
      break;
    }
  }
  return result;
}

Marginals cd_sweep(const Model& model, const Instance& instance, const Marginals& q0) {
  (void)instance;
  Marginals q1 = q0;
  q1.unclamp_all();
  std::vector<double> scratch(max_cardinality(q1));
  sweep(model, q1, scratch);
  return q1;
}

double expect_feature(const Feature& f, const Marginals& beliefs) {
  double p = 1.0;
  for (const State& st : f.states()) p *= beliefs.prob(st.variable, st.value);
  return p;
}

std::vector<double> feature_expectations(const Model& model, const Marginals& beliefs) {
  std::vector<double> out(model.feature_count());
  for (std::size_t r = 0; r < out.size(); ++r) {
    double p = 1.0;
    for (const State& st : model.feature_states(r)) p *= beliefs.prob(st.variable, st.value);
    out[r] = p;
  }
  return out;
}

double entropy(const Marginals& beliefs) {
  double h = 0.0;
  for (int k = 0; k < beliefs.variable_count(); ++k) {
    if (beliefs.clamped(k)) continue;
    for (double p : beliefs.dist(k)) {
      if (p > 0.0) h -= p * std::log(p);
    }
  }
  return h;
}

double free_energy(const Model& model, const Marginals& beliefs) {
  double linear = 0.0;
  for (std::size_t r = 0; r < model.feature_count(); ++r) {
    double p = model.weight(r);
    if (p == 0.0) continue;
    for (const State& st : model.feature_states(r)) p *= beliefs.prob(st.variable, st.value);
    linear += p;
  }
  return -linear - entropy(beliefs);
}

}  // namespace crflearn
