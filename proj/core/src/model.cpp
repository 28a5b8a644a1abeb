#include "crflearn/model.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

namespace crflearn {

VariableSchema::VariableSchema(std::vector<int> cardinalities)
    : cardinalities_(std::move(cardinalities)) {
  if (cardinalities_.empty()) {
    throw std::invalid_argument("schema needs at least one variable");
  }
  state_base_.reserve(cardinalities_.size() + 1);
  state_base_.push_back(0);
  for (int c : cardinalities_) {
    if (c < 2) throw std::invalid_argument("every cardinality must be >= 2");
    state_base_.push_back(state_base_.back() + c);
  }
}

namespace {

void check_states(const std::vector<State>& states) {
  if (states.empty()) throw std::invalid_argument("feature needs at least one state");
  for (std::size_t i = 1; i < states.size(); ++i) {
    if (states[i - 1].variable == states[i].variable) {
      throw std::invalid_argument("feature states must reference distinct variables");
    }
    if (!(states[i - 1] < states[i])) {
      throw std::invalid_argument("feature states must be sorted by (variable, value)");
    }
  }
}

}  // namespace

Feature Feature::from_states(std::vector<State> states) {
  std::sort(states.begin(), states.end());
  check_states(states);
  Feature f;
  f.states_ = std::move(states);
  return f;
}

Feature Feature::unary(State s) { return from_states({s}); }

Feature Feature::pairwise(State a, State b) { return from_states({a, b}); }

Feature Feature::higher_order(std::vector<State> states) {
  if (states.size() < 3) throw std::invalid_argument("higher-order feature needs k >= 3 states");
  return from_states(std::move(states));
}

FeatureKind Feature::kind() const {
  switch (states_.size()) {
    case 1: return FeatureKind::Unary;
    case 2: return FeatureKind::Pairwise;
    default: return FeatureKind::HigherOrder;
  }
}

std::string Feature::describe() const {
  std::ostringstream out;
  for (std::size_t i = 0; i < states_.size(); ++i) {
    if (i) out << ",";
    out << "x" << states_[i].variable << "=" << states_[i].value;
  }
  return out.str();
}

Feature canonical_pair(State a, State b) {
  if (a.variable == b.variable) {
    throw std::invalid_argument("pairwise feature needs two distinct variables");
  }
  return Feature::pairwise(a, b);
}

std::size_t FeatureHash::operator()(const Feature& f) const {
  std::size_t h = 0x9e3779b97f4a7c15ULL;
  for (const State& s : f.states()) {
    std::size_t k = (static_cast<std::size_t>(s.variable) << 20) ^ static_cast<std::size_t>(s.value);
    h ^= k + 0x9e3779b97f4a7c15ULL + (h << 6) + (h >> 2);
  }
  return h;
}

namespace {

int first_candidate_value(CandidatePolicy policy) {
  return policy == CandidatePolicy::NonReferenceStates ? 1 : 0;
}

}  // namespace

CandidateCounts candidate_counts(const VariableSchema& schema, CandidatePolicy policy) {
  const int lo = first_candidate_value(policy);
  CandidateCounts counts;
  std::uint64_t sum = 0, sum_sq = 0;
  for (int k = 0; k < schema.variable_count(); ++k) {
    const std::uint64_t c = static_cast<std::uint64_t>(schema.cardinality(k) - lo);
    counts.unary += c;
    sum += c;
    sum_sq += c * c;
  }
  counts.pairwise = (sum * sum - sum_sq) / 2;
  return counts;
}

void for_each_candidate_state(const VariableSchema& schema, CandidatePolicy policy,
                              const std::function<void(State)>& fn) {
  const int lo = first_candidate_value(policy);
  for (int k = 0; k < schema.variable_count(); ++k) {
    for (int v = lo; v < schema.cardinality(k); ++v) fn(State{k, v});
  }
}

void for_each_pairwise_candidate(const VariableSchema& schema, CandidatePolicy policy,
                                 const std::function<void(const Feature&)>& fn) {
  const int lo = first_candidate_value(policy);
  for (int a = 0; a < schema.variable_count(); ++a) {
    for (int va = lo; va < schema.cardinality(a); ++va) {
      for (int b = a + 1; b < schema.variable_count(); ++b) {
        for (int vb = lo; vb < schema.cardinality(b); ++vb) {
          fn(Feature::pairwise(State{a, va}, State{b, vb}));
        }
      }
    }
  }
}

std::vector<State> candidate_states(const VariableSchema& schema, CandidatePolicy policy) {
  std::vector<State> out;
  for_each_candidate_state(schema, policy, [&](State s) { out.push_back(s); });
  return out;
}

std::vector<Feature> pairwise_candidates(const VariableSchema& schema, CandidatePolicy policy) {
  std::vector<Feature> out;
  out.reserve(candidate_counts(schema, policy).pairwise);
  for_each_pairwise_candidate(schema, policy, [&](const Feature& f) { out.push_back(f); });
  return out;
}

struct Model::Structure {
  VariableSchema schema;
  CandidatePolicy policy;
  std::vector<Feature> features;
  std::unordered_map<Feature, std::size_t, FeatureHash> index;
  // CSR-style incidence: state slot -> feature indices.
  std::vector<std::int32_t> incident_offsets;
  std::vector<std::int32_t> incident;
  // Flattened state lists, parallel to features.
  std::vector<std::int32_t> state_offsets;
  std::vector<State> flat_states;

  Structure(VariableSchema s, CandidatePolicy p, std::vector<Feature> f)
      : schema(std::move(s)), policy(p), features(std::move(f)) {
    index.reserve(features.size() * 2);
    state_offsets.reserve(features.size() + 1);
    state_offsets.push_back(0);
    std::vector<std::int32_t> degree(schema.state_slot_count(), 0);
    for (std::size_t r = 0; r < features.size(); ++r) {
      const Feature& feat = features[r];
      for (const State& st : feat.states()) {
        if (st.variable < 0 || st.variable >= schema.variable_count() ||
            st.value < 0 || st.value >= schema.cardinality(st.variable)) {
          throw std::invalid_argument("feature state outside schema: " + feat.describe());
        }
        ++degree[schema.state_slot(st.variable, st.value)];
        flat_states.push_back(st);
      }
      state_offsets.push_back(static_cast<std::int32_t>(flat_states.size()));
      if (!index.emplace(feat, r).second) {
        throw std::invalid_argument("duplicate feature: " + feat.describe());
      }
    }
    incident_offsets.assign(schema.state_slot_count() + 1, 0);
    for (int s = 0; s < schema.state_slot_count(); ++s) {
      incident_offsets[s + 1] = incident_offsets[s] + degree[s];
    }
    incident.resize(flat_states.size());
    std::vector<std::int32_t> cursor(incident_offsets.begin(), incident_offsets.end() - 1);
    for (std::size_t r = 0; r < features.size(); ++r) {
      for (const State& st : features[r].states()) {
        incident[cursor[schema.state_slot(st.variable, st.value)]++] = static_cast<std::int32_t>(r);
      }
    }
  }
};

Model::Model(VariableSchema schema, CandidatePolicy policy)
    : structure_(std::make_shared<const Structure>(std::move(schema), policy,
                                                   std::vector<Feature>{})) {}

Model::Model(std::shared_ptr<const Structure> structure, std::vector<double> weights)
    : structure_(std::move(structure)), weights_(std::move(weights)) {}

const VariableSchema& Model::schema() const { return structure_->schema; }
CandidatePolicy Model::policy() const { return structure_->policy; }
const Feature& Model::feature(std::size_t r) const { return structure_->features[r]; }
const std::vector<Feature>& Model::features() const { return structure_->features; }

std::span<const std::int32_t> Model::incident(int variable, int value) const {
  const auto& s = *structure_;
  const int slot = s.schema.state_slot(variable, value);
  return {s.incident.data() + s.incident_offsets[slot],
          static_cast<std::size_t>(s.incident_offsets[slot + 1] - s.incident_offsets[slot])};
}

std::span<const State> Model::feature_states(std::size_t r) const {
  const auto& s = *structure_;
  return {s.flat_states.data() + s.state_offsets[r],
          static_cast<std::size_t>(s.state_offsets[r + 1] - s.state_offsets[r])};
}

std::optional<std::size_t> Model::find(const Feature& f) const {
  auto it = structure_->index.find(f);
  if (it == structure_->index.end()) return std::nullopt;
  return it->second;
}

std::size_t Model::active_count() const {
  std::size_t n = 0;
  for (double w : weights_) n += (w != 0.0);
  return n;
}

Model Model::with_weights(std::vector<double> weights) const {
  if (weights.size() != weights_.size()) {
    throw std::invalid_argument("weight vector length must equal feature count");
  }
  for (double w : weights) {
    if (!std::isfinite(w)) throw std::invalid_argument("weights must be finite");
  }
  return Model(structure_, std::move(weights));
}

Model activate_features(const Model& model, std::span<const Feature> added) {
  std::vector<Feature> merged = model.structure_->features;
  std::vector<double> weights = model.weights_;
  std::unordered_map<Feature, std::size_t, FeatureHash> seen = model.structure_->index;
  bool changed = false;
  for (const Feature& f : added) {
    Feature canonical = Feature::from_states(f.states());
    if (canonical.states() != f.states()) {
      throw std::invalid_argument("feature not in canonical form: " + f.describe());
    }
    if (seen.emplace(canonical, merged.size()).second) {
      merged.push_back(std::move(canonical));
      weights.push_back(0.0);
      changed = true;
    }
  }
  if (!changed) return model;
  auto structure = std::make_shared<const Model::Structure>(
      model.structure_->schema, model.structure_->policy, std::move(merged));
  return Model(std::move(structure), std::move(weights));
}

Model init_unary_model(const VariableSchema& schema, CandidatePolicy policy) {
  std::vector<Feature> unary;
  for_each_candidate_state(schema, policy,
                           [&](State s) { unary.push_back(Feature::unary(s)); });
  return activate_features(Model(schema, policy), unary);
}

int Instance::hidden_count() const {
  int n = 0;
  for (auto h : hidden) n += (h != 0);
  return n;
}

Dataset::Dataset(VariableSchema schema, std::vector<Instance> instances)
    : schema_(std::move(schema)), instances_(std::move(instances)) {
  const int n = schema_.variable_count();
  for (const Instance& inst : instances_) {
    if (static_cast<int>(inst.values.size()) != n ||
        static_cast<int>(inst.hidden.size()) != n) {
      throw std::invalid_argument("instance length does not match schema");
    }
    for (int k = 0; k < n; ++k) {
      if (inst.values[k] < 0 || inst.values[k] >= schema_.cardinality(k)) {
        throw std::invalid_argument("instance value outside cardinality");
      }
    }
  }
}

}  // namespace crflearn
