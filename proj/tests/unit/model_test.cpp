#include <doctest.h>

#include <set>

#include "crflearn/model.hpp"
#include "crflearn/rng.hpp"

using namespace crflearn;

TEST_SUITE_BEGIN("model");

TEST_CASE("schema validates cardinalities") {
  CHECK_THROWS_AS(VariableSchema(std::vector<int>{}), std::invalid_argument);
  CHECK_THROWS_AS(VariableSchema({2, 1}), std::invalid_argument);
  VariableSchema s({2, 3, 2});
  CHECK(s.variable_count() == 3);
  CHECK(s.cardinality(1) == 3);
  CHECK(s.state_slot_count() == 7);
}

TEST_CASE("canonical_pair sorts and rejects self pairs") {
  Feature f = canonical_pair(State{3, 1}, State{1, 0});
  CHECK(f.states() == std::vector<State>{{1, 0}, {3, 1}});

  Feature g = canonical_pair(State{0, 1}, State{5, 1});
  CHECK(g.states() == std::vector<State>{{0, 1}, {5, 1}});

  CHECK_THROWS_AS(canonical_pair(State{2, 0}, State{2, 1}), std::invalid_argument);
}

TEST_CASE("canonical_pair is symmetric and idempotent") {
  Rng rng(11);
  for (int t = 0; t < 200; ++t) {
    State a{rng.next_int(20), rng.next_int(3)};
    State b{rng.next_int(20), rng.next_int(3)};
    if (a.variable == b.variable) continue;
    Feature ab = canonical_pair(a, b);
    Feature ba = canonical_pair(b, a);
    CHECK(ab == ba);
    CHECK(Feature::from_states(ab.states()) == ab);
  }
}

TEST_CASE("candidate counts match the closed forms") {
  // All-binary: N unary + N(N-1)/2 pairwise.
  VariableSchema big(std::vector<int>(1000, 2));
  CHECK(candidate_counts(big, CandidatePolicy::NonReferenceStates).pairwise == 499500);

  VariableSchema animal(std::vector<int>(85, 2));
  auto c = candidate_counts(animal, CandidatePolicy::NonReferenceStates);
  CHECK(c.unary == 85);
  CHECK(c.pairwise == 3570);
  CHECK(c.total() == 3655);

  VariableSchema lone({2});
  CHECK(candidate_counts(lone, CandidatePolicy::NonReferenceStates).pairwise == 0);
}

TEST_CASE("candidate counts agree with explicit enumeration") {
  Rng rng(7);
  for (int n = 1; n <= 50; n += 7) {
    std::vector<int> cards;
    for (int k = 0; k < n; ++k) cards.push_back(2 + rng.next_int(3));
    VariableSchema schema(cards);
    for (auto policy : {CandidatePolicy::NonReferenceStates, CandidatePolicy::AllValuePairs}) {
      auto counts = candidate_counts(schema, policy);
      std::uint64_t unary = 0, pairwise = 0;
      for_each_candidate_state(schema, policy, [&](State) { ++unary; });
      for_each_pairwise_candidate(schema, policy, [&](const Feature&) { ++pairwise; });
      CHECK(counts.unary == unary);
      CHECK(counts.pairwise == pairwise);
    }
  }
}

TEST_CASE("pairwise candidates are canonical, distinct, ascending") {
  VariableSchema schema({2, 3, 2});
  auto candidates = pairwise_candidates(schema, CandidatePolicy::NonReferenceStates);
  std::set<Feature> seen;
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    CHECK(candidates[i].kind() == FeatureKind::Pairwise);
    CHECK(seen.insert(candidates[i]).second);
  }
  // (1+2+1 candidate states) taken pairwise across distinct variables.
  CHECK(candidates.size() == 5);
}

TEST_CASE("init_unary_model") {
  Model m = init_unary_model(VariableSchema({2, 2, 2}));
  CHECK(m.feature_count() == 3);
  for (double w : m.weights()) CHECK(w == 0.0);
  for (const Feature& f : m.features()) CHECK(f.kind() == FeatureKind::Unary);

  Model ternary = init_unary_model(VariableSchema({3, 3}));
  CHECK(ternary.feature_count() == 4);

  CHECK_THROWS_AS(VariableSchema(std::vector<int>{}), std::invalid_argument);
}

TEST_CASE("activate_features unions without duplicates") {
  Model m = init_unary_model(VariableSchema(std::vector<int>(4, 2)));
  const Feature pair01 = canonical_pair(State{0, 1}, State{1, 1});

  Model m2 = activate_features(m, std::vector<Feature>{pair01});
  CHECK(m2.feature_count() == m.feature_count() + 1);
  CHECK(m2.weight(*m2.find(pair01)) == 0.0);

  // already-present feature: unchanged
  Model m3 = activate_features(m2, std::vector<Feature>{pair01});
  CHECK(m3.feature_count() == m2.feature_count());

  // empty addition: unchanged
  Model m4 = activate_features(m2, std::vector<Feature>{});
  CHECK(m4.feature_count() == m2.feature_count());

  // existing weights survive
  std::vector<double> w = m2.weights();
  w[*m2.find(pair01)] = 1.5;
  Model m5 = activate_features(m2.with_weights(w),
                               std::vector<Feature>{canonical_pair(State{2, 1}, State{3, 1})});
  CHECK(m5.weight(*m5.find(pair01)) == 1.5);
  CHECK(m5.feature_count() == m2.feature_count() + 1);
}

TEST_CASE("activate_features adds a full batch") {
  VariableSchema schema(std::vector<int>(20, 2));
  Model m = init_unary_model(schema);
  auto candidates = pairwise_candidates(schema, CandidatePolicy::NonReferenceStates);
  std::vector<Feature> batch(candidates.begin(), candidates.begin() + 50);
  Model m2 = activate_features(m, batch);
  CHECK(m2.feature_count() == m.feature_count() + 50);
  for (const Feature& f : batch) CHECK(m2.weight(*m2.find(f)) == 0.0);
}

TEST_CASE("model rejects bad inputs") {
  Model m = init_unary_model(VariableSchema({2, 2}));
  CHECK_THROWS_AS(m.with_weights({1.0}), std::invalid_argument);
  CHECK_THROWS_AS(
      m.with_weights(std::vector<double>{0.0, std::numeric_limits<double>::infinity()}),
      std::invalid_argument);
  // state outside schema
  CHECK_THROWS_AS(
      activate_features(m, std::vector<Feature>{canonical_pair(State{0, 1}, State{5, 1})}),
      std::invalid_argument);
}

TEST_CASE("incident index covers exactly the member features") {
  VariableSchema schema({2, 2, 2});
  Model m = init_unary_model(schema);
  m = activate_features(m, std::vector<Feature>{canonical_pair(State{0, 1}, State{1, 1}),
                                                canonical_pair(State{1, 1}, State{2, 1})});
  CHECK(m.incident(1, 1).size() == 3);  // unary + two pairs
  CHECK(m.incident(1, 0).size() == 0);
  CHECK(m.incident(0, 1).size() == 2);
}

TEST_CASE("instance and dataset validation") {
  VariableSchema schema({2, 3});
  Instance good{{1, 2}, {0, 0}};
  Dataset d(schema, {good});
  CHECK(d.size() == 1);
  CHECK_THROWS_AS(Dataset(schema, {Instance{{1}, {0}}}), std::invalid_argument);
  CHECK_THROWS_AS(Dataset(schema, {Instance{{1, 3}, {0, 0}}}), std::invalid_argument);
}

TEST_SUITE_END();
