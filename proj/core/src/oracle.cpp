#include "crflearn/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace crflearn {

EnumerationLimitError::EnumerationLimitError(std::uint64_t size, std::uint64_t limit)
    : std::runtime_error("joint state space of " + std::to_string(size) +
                         " assignments exceeds the enumeration limit of " +
                         std::to_string(limit)),
      size_(size) {}

namespace {

struct Enumeration {
  std::vector<int> free_vars;
  std::vector<std::uint8_t> is_free;
  std::vector<int> values;  // work assignment, clamped values pre-filled
  std::uint64_t count = 1;
};

// Free variables = hidden ones when clamp_labels, else hidden + labels.
Enumeration make_enumeration(const Model& model, const Instance& instance, bool clamp_labels) {
  const VariableSchema& schema = model.schema();
  Enumeration e;
  e.is_free.assign(schema.variable_count(), 0);
  e.values = instance.values;
  for (int k = 0; k < schema.variable_count(); ++k) {
    const bool free = instance.is_hidden(k) || !clamp_labels;
    if (!free) continue;
    e.is_free[k] = 1;
    e.free_vars.push_back(k);
    const std::uint64_t card = static_cast<std::uint64_t>(schema.cardinality(k));
    if (e.count > kEnumerationLimit / card) {
      // Compute the true size saturating at overflow for the error message.
      long double size = 1.0L;
      for (int j : e.free_vars) size *= schema.cardinality(j);
      for (int j = k + 1; j < schema.variable_count(); ++j) {
        if (instance.is_hidden(j) || !clamp_labels) size *= schema.cardinality(j);
      }
      throw EnumerationLimitError(
          size > 1e18L ? UINT64_MAX : static_cast<std::uint64_t>(size), kEnumerationLimit);
    }
    e.count *= card;
  }
  return e;
}

double score_assignment(const Model& model, const std::vector<int>& values) {
  double s = 0.0;
  for (std::size_t r = 0; r < model.feature_count(); ++r) {
    bool fires = true;
    for (const State& st : model.feature_states(r)) {
      if (values[st.variable] != st.value) {
        fires = false;
        break;
      }
    }
    if (fires) s += model.weight(r);
  }
  return s;
}

// Iterates assignments in mixed-radix order (first free variable least
// significant), calling fn(index, values).
template <class Fn>
void enumerate(const VariableSchema& schema, Enumeration& e, Fn&& fn) {
  for (int k : e.free_vars) e.values[k] = 0;
  for (std::uint64_t idx = 0;; ++idx) {
    fn(idx, e.values);
    std::size_t pos = 0;
    for (; pos < e.free_vars.size(); ++pos) {
      const int k = e.free_vars[pos];
      if (++e.values[k] < schema.cardinality(k)) break;
      e.values[k] = 0;
    }
    if (pos == e.free_vars.size()) break;
  }
}

// Fills probs with the normalized distribution; returns log Z.
double normalize_scores(std::vector<double>& scores) {
  double hi = scores.empty() ? 0.0 : *std::max_element(scores.begin(), scores.end());
  double z = 0.0;
  for (double s : scores) z += std::exp(s - hi);
  const double log_z = hi + std::log(z);
  for (double& s : scores) s = std::exp(s - log_z);
  return log_z;
}

}  // namespace

std::vector<int> JointTable::assignment(std::uint64_t index) const {
  std::vector<int> values = clamped_values;
  for (int k : free_variables) {
    const std::uint64_t card = static_cast<std::uint64_t>(schema.cardinality(k));
    values[k] = static_cast<int>(index % card);
    index /= card;
  }
  return values;
}

JointTable exact_conditional(const Model& model, const Instance& instance) {
  Enumeration e = make_enumeration(model, instance, /*clamp_labels=*/true);
  JointTable table;
  table.schema = model.schema();
  table.free_variables = e.free_vars;
  table.clamped_values = instance.values;
  table.is_free = e.is_free;
  table.probs.resize(e.count);
  enumerate(model.schema(), e, [&](std::uint64_t idx, const std::vector<int>& values) {
    table.probs[idx] = score_assignment(model, values);
  });
  table.log_z = normalize_scores(table.probs);
  table.z = std::exp(table.log_z);
  return table;
}

std::vector<std::vector<double>> exact_marginals(const JointTable& table) {
  const VariableSchema& schema = table.schema;
  std::vector<std::vector<double>> out(schema.variable_count());
  for (int k = 0; k < schema.variable_count(); ++k) {
    out[k].assign(schema.cardinality(k), 0.0);
    if (!table.is_free[k]) out[k][table.clamped_values[k]] = 1.0;
  }
  // Accumulate marginals of free variables by walking the mixed-radix index.
  std::vector<int> values(table.clamped_values);
  for (int k : table.free_variables) values[k] = 0;
  for (std::uint64_t idx = 0; idx < table.assignment_count(); ++idx) {
    for (int k : table.free_variables) out[k][values[k]] += table.probs[idx];
    std::size_t pos = 0;
    for (; pos < table.free_variables.size(); ++pos) {
      const int k = table.free_variables[pos];
      if (++values[k] < schema.cardinality(k)) break;
      values[k] = 0;
    }
    if (pos == table.free_variables.size()) break;
  }
  return out;
}

CllGradient exact_cll_and_gradient(const Model& model, const Instance& instance) {
  const std::size_t n_features = model.feature_count();

  auto expectations = [&](bool clamp_labels, double* log_z) {
    Enumeration e = make_enumeration(model, instance, clamp_labels);
    std::vector<double> scores(e.count);
    enumerate(model.schema(), e, [&](std::uint64_t idx, const std::vector<int>& values) {
      scores[idx] = score_assignment(model, values);
    });
    *log_z = normalize_scores(scores);
    std::vector<double> expect(n_features, 0.0);
    enumerate(model.schema(), e, [&](std::uint64_t idx, const std::vector<int>& values) {
      const double p = scores[idx];
      for (std::size_t r = 0; r < n_features; ++r) {
        bool fires = true;
        for (const State& st : model.feature_states(r)) {
          if (values[st.variable] != st.value) {
            fires = false;
            break;
          }
        }
        if (fires) expect[r] += p;
      }
    });
    return expect;
  };

  double log_z_clamped = 0.0, log_z_free = 0.0;
  std::vector<double> e_clamped = expectations(/*clamp_labels=*/true, &log_z_clamped);
  std::vector<double> e_free = expectations(/*clamp_labels=*/false, &log_z_free);

  CllGradient out;
  out.cll = log_z_clamped - log_z_free;
  out.gradient.resize(n_features);
  for (std::size_t r = 0; r < n_features; ++r) out.gradient[r] = e_free[r] - e_clamped[r];
  return out;
}

double kl_to_exact(const Marginals& beliefs, const JointTable& table, const Model& model) {
  (void)model;
  const VariableSchema& schema = table.schema;
  std::vector<int> values(table.clamped_values);
  for (int k : table.free_variables) values[k] = 0;
  double kl = 0.0;
  for (std::uint64_t idx = 0; idx < table.assignment_count(); ++idx) {
    double q = 1.0;
    for (int k : table.free_variables) q *= beliefs.prob(k, values[k]);
    if (q > 0.0) {
      const double p = std::max(table.probs[idx], 1e-300);
      kl += q * (std::log(q) - std::log(p));
    }
    std::size_t pos = 0;
    for (; pos < table.free_variables.size(); ++pos) {
      const int k = table.free_variables[pos];
      if (++values[k] < schema.cardinality(k)) break;
      values[k] = 0;
    }
    if (pos == table.free_variables.size()) break;
  }
  return kl;
}

}  // namespace crflearn
