#include "crflearn/datagen.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "crflearn/rng.hpp"

namespace crflearn {

namespace {

// Sub-stream labels for per-phase seed derivation.
enum SeedStream : std::uint64_t { kStructure = 1, kWeights = 2, kChain = 3 };

}  // namespace

void SyntheticSpec::validate() const {
  if (nodes < 1) throw std::invalid_argument("nodes must be >= 1");
  if (degree <= 0.0 || (nodes > 1 && degree >= nodes)) {
    throw std::invalid_argument("degree must satisfy 0 < K < N");
  }
  if (weight_lo >= weight_hi) throw std::invalid_argument("weight range must be non-empty");
  if (samples < 1) throw std::invalid_argument("samples must be >= 1");
  if (burn_in < 1 || thinning < 1) throw std::invalid_argument("burn-in and thinning must be >= 1");
}

SyntheticSample sample_structure(const SyntheticSpec& spec) {
  spec.validate();
  VariableSchema schema(std::vector<int>(spec.nodes, 2));
  const double p = spec.nodes > 1 ? spec.degree / (spec.nodes - 1) : 0.0;

  Rng structure_rng(derive_seed(spec.seed, kStructure));
  std::vector<Edge> edges;
  for (int a = 0; a < spec.nodes; ++a) {
    for (int b = a + 1; b < spec.nodes; ++b) {
      if (structure_rng.next_bernoulli(p)) edges.push_back(Edge{a, b, 0.0});
    }
  }
  Rng weight_rng(derive_seed(spec.seed, kWeights));
  for (Edge& e : edges) e.weight = weight_rng.next_uniform(spec.weight_lo, spec.weight_hi);

  Model model = init_unary_model(schema);
  std::vector<Feature> features;
  features.reserve(edges.size());
  for (const Edge& e : edges) {
    features.push_back(Feature::pairwise(State{e.a, 1}, State{e.b, 1}));
  }
  model = activate_features(model, features);
  std::vector<double> weights = model.weights();
  for (std::size_t i = 0; i < edges.size(); ++i) {
    const auto idx = model.find(features[i]);
    weights[*idx] = edges[i].weight;
  }
  return SyntheticSample{model.with_weights(std::move(weights)), std::move(edges)};
}

namespace {

// Exact single-site conditional sampling: the score of value v is the sum of
// incident weights whose other member states all hold in the current
// assignment.
int sample_conditional(const Model& model, const std::vector<int>& values, int k, Rng& rng,
                       std::vector<double>& scratch) {
  const int card = model.schema().cardinality(k);
  for (int v = 0; v < card; ++v) {
    double score = 0.0;
    for (std::int32_t r : model.incident(k, v)) {
      bool holds = true;
      for (const State& st : model.feature_states(r)) {
        if (st.variable != k && values[st.variable] != st.value) {
          holds = false;
          break;
        }
      }
      if (holds) score += model.weight(r);
    }
    scratch[v] = score;
  }
  double hi = scratch[0];
  for (int v = 1; v < card; ++v) hi = std::max(hi, scratch[v]);
  double z = 0.0;
  for (int v = 0; v < card; ++v) {
    scratch[v] = std::exp(scratch[v] - hi);
    z += scratch[v];
  }
  const double u = rng.next_double() * z;
  double acc = 0.0;
  for (int v = 0; v < card; ++v) {
    acc += scratch[v];
    if (u < acc) return v;
  }
  return card - 1;
}

}  // namespace

Dataset gibbs_chain(const Model& truth, const SyntheticSpec& spec, GibbsStats* stats) {
  spec.validate();
  const VariableSchema& schema = truth.schema();
  const int n = schema.variable_count();
  Rng rng(derive_seed(spec.seed, kChain));

  std::vector<int> values(n);
  for (int k = 0; k < n; ++k) values[k] = rng.next_int(schema.cardinality(k));

  int max_card = 0;
  for (int k = 0; k < n; ++k) max_card = std::max(max_card, schema.cardinality(k));
  std::vector<double> scratch(max_card);

  auto sweep = [&] {
    for (int k = 0; k < n; ++k) values[k] = sample_conditional(truth, values, k, rng, scratch);
    if (stats) ++stats->sweeps;
  };

  std::vector<Instance> instances;
  instances.reserve(spec.samples);
  for (int s = 0; s < spec.samples; ++s) {
    const int sweeps = (s == 0) ? spec.burn_in : spec.thinning;
    for (int t = 0; t < sweeps; ++t) sweep();
    instances.push_back(Instance{values, std::vector<std::uint8_t>(n, 0)});
  }
  return Dataset(schema, std::move(instances));
}

}  // namespace crflearn
