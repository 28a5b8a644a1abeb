#pragma once

#include <compare>
#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

namespace crflearn {

/// Per-variable value counts of a discrete variable set.
class VariableSchema {
 public:
  VariableSchema() = default;
  explicit VariableSchema(std::vector<int> cardinalities);

  int variable_count() const { return static_cast<int>(cardinalities_.size()); }
  int cardinality(int variable) const { return cardinalities_[variable]; }
  const std::vector<int>& cardinalities() const { return cardinalities_; }

  /// Flat slot index of (variable, value); slots enumerate all states.
  int state_slot(int variable, int value) const { return state_base_[variable] + value; }
  int state_slot_count() const { return state_base_.empty() ? 0 : state_base_.back(); }

  bool operator==(const VariableSchema& other) const {
    return cardinalities_ == other.cardinalities_;
  }

 private:
  std::vector<int> cardinalities_;
  std::vector<int> state_base_;  // size N+1; prefix sums of cardinalities
};

/// A (variable, value) pair, e.g. "variable 3 takes value 1".
struct State {
  int variable = 0;
  int value = 0;
  friend auto operator<=>(const State&, const State&) = default;
};

enum class FeatureKind { Unary, Pairwise, HigherOrder };

/// Indicator feature over one or more states of distinct variables. A feature
/// fires (value 1) when every state holds. States are kept sorted by
/// (variable, value), which is the canonical form; two features are equal iff
/// their canonical state lists are equal.
class Feature {
 public:
  Feature() = default;
  static Feature unary(State s);
  static Feature pairwise(State a, State b);
  /// k >= 3 states; sorts into canonical form, rejects duplicate variables.
  static Feature higher_order(std::vector<State> states);
  /// Accepts any arity >= 1.
  static Feature from_states(std::vector<State> states);

  FeatureKind kind() const;
  const std::vector<State>& states() const { return states_; }
  std::size_t arity() const { return states_.size(); }

  std::string describe() const;

  friend bool operator==(const Feature& a, const Feature& b) { return a.states_ == b.states_; }
  friend auto operator<=>(const Feature& a, const Feature& b) { return a.states_ <=> b.states_; }

 private:
  std::vector<State> states_;
};

/// Canonical pairwise feature over two states of distinct variables;
/// symmetric in its arguments.
Feature canonical_pair(State a, State b);

struct FeatureHash {
  std::size_t operator()(const Feature& f) const;
};

/// Governs which states generate candidate features. Under NonReferenceStates
/// value 0 of every variable is the reference value and generates nothing;
/// AllValuePairs uses the full value product space.
enum class CandidatePolicy { NonReferenceStates, AllValuePairs };

struct CandidateCounts {
  std::uint64_t unary = 0;
  std::uint64_t pairwise = 0;
  std::uint64_t total() const { return unary + pairwise; }
};

CandidateCounts candidate_counts(const VariableSchema& schema, CandidatePolicy policy);

/// Visits candidate states in ascending (variable, value) order.
void for_each_candidate_state(const VariableSchema& schema, CandidatePolicy policy,
                              const std::function<void(State)>& fn);

/// Visits pairwise candidates in ascending canonical order (lazy; nothing is
/// materialized).
void for_each_pairwise_candidate(const VariableSchema& schema, CandidatePolicy policy,
                                 const std::function<void(const Feature&)>& fn);

std::vector<State> candidate_states(const VariableSchema& schema, CandidatePolicy policy);
std::vector<Feature> pairwise_candidates(const VariableSchema& schema, CandidatePolicy policy);

/// Immutable feature set + weight vector over a schema. Copies are cheap (the
/// structural part is shared); all mutation produces a new Model.
class Model {
 public:
  explicit Model(VariableSchema schema,
                 CandidatePolicy policy = CandidatePolicy::NonReferenceStates);

  const VariableSchema& schema() const;
  CandidatePolicy policy() const;

  std::size_t feature_count() const { return weights_.size(); }
  const Feature& feature(std::size_t r) const;
  const std::vector<Feature>& features() const;
  const std::vector<double>& weights() const { return weights_; }
  double weight(std::size_t r) const { return weights_[r]; }

  /// Indices of features involving state (variable, value).
  std::span<const std::int32_t> incident(int variable, int value) const;
  std::optional<std::size_t> find(const Feature& f) const;

  /// Features with non-zero weight.
  std::size_t active_count() const;

  /// Same structure, new weights (must be finite, same length).
  Model with_weights(std::vector<double> weights) const;

  /// Structural append; rejects non-canonical features, ignores duplicates.
  /// New features enter with weight 0, existing weights are unchanged.
  friend Model activate_features(const Model& model, std::span<const Feature> added);

  // Flattened state list of feature r, for hot loops.
  std::span<const State> feature_states(std::size_t r) const;

 private:
  struct Structure;
  Model(std::shared_ptr<const Structure> structure, std::vector<double> weights);

  std::shared_ptr<const Structure> structure_;
  std::vector<double> weights_;
};

Model activate_features(const Model& model, std::span<const Feature> added);

/// Model over `schema` holding exactly the unary candidate features of the
/// policy, all with weight 0.
Model init_unary_model(const VariableSchema& schema,
                       CandidatePolicy policy = CandidatePolicy::NonReferenceStates);

/// One assignment of every variable plus a mask telling which variables are
/// treated as hidden (true) versus observed labels (false).
struct Instance {
  std::vector<int> values;
  std::vector<std::uint8_t> hidden;

  bool is_hidden(int variable) const { return hidden[variable] != 0; }
  int hidden_count() const;
};

class Dataset {
 public:
  Dataset() = default;
  Dataset(VariableSchema schema, std::vector<Instance> instances);

  const VariableSchema& schema() const { return schema_; }
  const std::vector<Instance>& instances() const { return instances_; }
  const Instance& instance(std::size_t i) const { return instances_[i]; }
  std::size_t size() const { return instances_.size(); }

 private:
  VariableSchema schema_;
  std::vector<Instance> instances_;
};

}  // namespace crflearn
