#include <doctest.h>

#include <cmath>

#include "crflearn/mean_field.hpp"
#include "crflearn/oracle.hpp"
#include "crflearn/rng.hpp"

using namespace crflearn;

namespace {

double sigmoid(double w) { return 1.0 / (1.0 + std::exp(-w)); }

Model random_model(Rng& rng, int n, double weight_scale, double edge_prob = 0.5) {
  std::vector<int> cards;
  for (int k = 0; k < n; ++k) cards.push_back(2 + rng.next_int(2));
  VariableSchema schema(cards);
  Model m = init_unary_model(schema);
  std::vector<Feature> picked;
  for_each_pairwise_candidate(schema, CandidatePolicy::NonReferenceStates,
                              [&](const Feature& f) {
                                if (rng.next_bernoulli(edge_prob)) picked.push_back(f);
                              });
  m = activate_features(m, picked);
  std::vector<double> w = m.weights();
  for (double& x : w) x = rng.next_uniform(-weight_scale, weight_scale);
  return m.with_weights(w);
}

Instance random_instance(Rng& rng, const VariableSchema& schema, double hidden_prob) {
  Instance inst;
  for (int k = 0; k < schema.variable_count(); ++k) {
    inst.values.push_back(rng.next_int(schema.cardinality(k)));
    inst.hidden.push_back(rng.next_bernoulli(hidden_prob) ? 1 : 0);
  }
  return inst;
}

}  // namespace

TEST_SUITE_BEGIN("mean_field");

TEST_CASE("update_variable: zero weights give the uniform vector") {
  Model m = init_unary_model(VariableSchema({2, 3, 2}));
  Marginals beliefs(m.schema());
  auto d = update_variable(m, beliefs, 1);
  REQUIRE(d.size() == 3);
  for (double p : d) CHECK(p == doctest::Approx(1.0 / 3).epsilon(1e-12));
}

TEST_CASE("update_variable: isolated unary weight gives the logistic form") {
  Model m = init_unary_model(VariableSchema({2}));
  for (double w : {0.0, 0.7, -2.0, 5.0}) {
    Model mw = m.with_weights({w});
    Marginals beliefs(m.schema());
    auto d = update_variable(mw, beliefs, 0);
    CHECK(d[1] == doctest::Approx(sigmoid(w)).epsilon(1e-12));
  }
}

TEST_CASE("update_variable: clamped neighbor contributes its point mass") {
  VariableSchema schema({2, 2});
  Model m = init_unary_model(schema);
  const Feature pair = canonical_pair(State{0, 1}, State{1, 1});
  m = activate_features(m, std::vector<Feature>{pair});
  std::vector<double> w = m.weights();
  w[*m.find(pair)] = 1.3;
  m = m.with_weights(w);

  Marginals beliefs(schema);
  beliefs.clamp(0, 1);
  auto d = update_variable(m, beliefs, 1);
  CHECK(d[1] == doctest::Approx(sigmoid(1.3)).epsilon(1e-12));
}

TEST_CASE("mf_converge: fully observed instance is the point mass") {
  Model m = init_unary_model(VariableSchema({2, 2}));
  MfResult r = mf_converge(m, Instance{{1, 0}, {0, 0}});
  CHECK(r.converged);
  CHECK(r.sweeps == 0);
  CHECK(r.beliefs.prob(0, 1) == 1.0);
  CHECK(r.beliefs.prob(1, 0) == 1.0);
  CHECK(r.beliefs.clamped(0));
}

TEST_CASE("mf_converge: free variable under zero weights is uniform") {
  Model m = init_unary_model(VariableSchema({2, 2}));
  MfResult r = mf_converge(m, Instance{{0, 0}, {1, 0}});
  CHECK(r.beliefs.prob(0, 0) == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(!r.beliefs.clamped(0));
}

TEST_CASE("mf_converge: strong chain edge pulls the hidden variable") {
  VariableSchema schema({2, 2});
  Model m = init_unary_model(schema);
  const Feature pair = canonical_pair(State{0, 1}, State{1, 1});
  m = activate_features(m, std::vector<Feature>{pair});
  std::vector<double> w = m.weights();
  w[*m.find(pair)] = 5.0;
  m = m.with_weights(w);

  MfResult r = mf_converge(m, Instance{{1, 0}, {0, 1}});  // var 0 observed at 1, var 1 hidden
  CHECK(r.converged);
  CHECK(r.beliefs.prob(1, 1) == doctest::Approx(sigmoid(5.0)).epsilon(1e-9));
}

TEST_CASE("mf_converge result is a fixed point within tol") {
  Rng rng(101);
  MfOptions opt;
  for (int t = 0; t < 40; ++t) {
    Model m = random_model(rng, 2 + rng.next_int(5), 3.0);
    Instance inst = random_instance(rng, m.schema(), 0.6);
    MfResult r = mf_converge(m, inst, opt);
    if (!r.converged) continue;
    for (int k = 0; k < m.schema().variable_count(); ++k) {
      if (r.beliefs.clamped(k)) continue;
      auto fresh = update_variable(m, r.beliefs, k);
      for (int v = 0; v < m.schema().cardinality(k); ++v) {
        CHECK(std::abs(fresh[v] - r.beliefs.prob(k, v)) < opt.tol);
      }
    }
  }
}

TEST_CASE("sweeps never increase the free energy") {
  Rng rng(202);
  MfOptions opt;
  opt.track_free_energy = true;
  for (int t = 0; t < 40; ++t) {
    Model m = random_model(rng, 2 + rng.next_int(5), 4.0);
    Instance inst = random_instance(rng, m.schema(), 0.7);
    MfResult r = mf_converge(m, inst, opt);
    for (std::size_t s = 1; s < r.sweep_free_energy.size(); ++s) {
      CHECK(r.sweep_free_energy[s] <= r.sweep_free_energy[s - 1] + 1e-9);
    }
  }
}

TEST_CASE("cd_sweep: zero weights give uniform beliefs regardless of q0") {
  Model m = init_unary_model(VariableSchema({2, 3}));
  MfResult r = mf_converge(m, Instance{{1, 2}, {0, 0}});
  Marginals q1 = cd_sweep(m, Instance{{1, 2}, {0, 0}}, r.beliefs);
  CHECK(q1.prob(0, 1) == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(q1.prob(1, 2) == doctest::Approx(1.0 / 3).epsilon(1e-12));
  CHECK(!q1.clamped(0));
}

TEST_CASE("cd_sweep: isolated unary variable reconstructs the logistic form") {
  Model m = init_unary_model(VariableSchema({2})).with_weights({0.9});
  Instance inst{{1}, {0}};
  MfResult r = mf_converge(m, inst);
  Marginals q1 = cd_sweep(m, inst, r.beliefs);
  CHECK(q1.prob(0, 1) == doctest::Approx(sigmoid(0.9)).epsilon(1e-12));
}

TEST_CASE("cd_sweep after converged unary weights has zero mean error") {
  // Unary stationarity: w_k = logit(empirical p), so the reconstruction mean
  // equals the empirical mean state by state.
  VariableSchema schema({2, 2, 2});
  std::vector<Instance> instances;
  Rng rng(7);
  for (int i = 0; i < 16; ++i) {
    Instance inst;
    for (int k = 0; k < 3; ++k) inst.values.push_back(rng.next_int(2));
    inst.hidden.assign(3, 0);
    instances.push_back(inst);
  }
  Dataset data(schema, instances);
  std::vector<double> phat(3, 0.0);
  for (const Instance& inst : instances) {
    for (int k = 0; k < 3; ++k) phat[k] += inst.values[k];
  }
  Model m = init_unary_model(schema);
  std::vector<double> w = m.weights();
  for (int k = 0; k < 3; ++k) {
    const double p = phat[k] / instances.size();
    REQUIRE(p > 0.0);
    REQUIRE(p < 1.0);
    w[*m.find(Feature::unary(State{k, 1}))] = std::log(p / (1 - p));
  }
  m = m.with_weights(w);

  for (int k = 0; k < 3; ++k) {
    double mean_err = 0.0;
    for (const Instance& inst : data.instances()) {
      MfResult r = mf_converge(m, inst);
      Marginals q1 = cd_sweep(m, inst, r.beliefs);
      mean_err += q1.prob(k, 1) - r.beliefs.prob(k, 1);
    }
    CHECK(std::abs(mean_err / data.size()) < 1e-12);
  }
}

TEST_CASE("cd_sweep never increases the free energy") {
  Rng rng(303);
  for (int t = 0; t < 40; ++t) {
    Model m = random_model(rng, 2 + rng.next_int(5), 4.0);
    Instance inst = random_instance(rng, m.schema(), 0.4);
    MfResult r = mf_converge(m, inst);
    const double f0 = free_energy(m, r.beliefs);
    Marginals q1 = cd_sweep(m, inst, r.beliefs);
    CHECK(free_energy(m, q1) <= f0 + 1e-9);
  }
}

TEST_CASE("expect_feature multiplies member marginals") {
  VariableSchema schema({2, 2});
  Marginals beliefs(schema);
  beliefs.set_dist(0, std::vector<double>{0.7, 0.3});
  CHECK(expect_feature(Feature::unary(State{0, 1}), beliefs) == doctest::Approx(0.3));

  beliefs.clamp(0, 1);
  beliefs.clamp(1, 1);
  CHECK(expect_feature(canonical_pair(State{0, 1}, State{1, 1}), beliefs) == 1.0);

  beliefs.set_dist(0, std::vector<double>{0.75, 0.25});
  beliefs.set_dist(1, std::vector<double>{0.2, 0.8});
  CHECK(expect_feature(canonical_pair(State{0, 1}, State{1, 1}), beliefs) ==
        doctest::Approx(0.2).epsilon(1e-12));
}

TEST_CASE("entropy") {
  VariableSchema schema({2, 2, 2});
  Marginals uniform(schema);
  CHECK(entropy(uniform) == doctest::Approx(3 * std::log(2.0)).epsilon(1e-12));

  Marginals clamped(schema);
  for (int k = 0; k < 3; ++k) clamped.clamp(k, 1);
  CHECK(entropy(clamped) == 0.0);

  Marginals skewed(VariableSchema({2}));
  skewed.set_dist(0, std::vector<double>{0.9, 0.1});
  CHECK(entropy(skewed) ==
        doctest::Approx(-0.9 * std::log(0.9) - 0.1 * std::log(0.1)).epsilon(1e-12));
}

TEST_CASE("free_energy") {
  // zero weights, all free: F = -entropy
  Model m = init_unary_model(VariableSchema({2, 2}));
  Marginals uniform(m.schema());
  CHECK(free_energy(m, uniform) == doctest::Approx(-2 * std::log(2.0)).epsilon(1e-12));

  // point mass: F = -score of the assignment
  Model mw = m.with_weights({1.5, -0.5});
  Marginals point(m.schema());
  point.clamp(0, 1);
  point.clamp(1, 0);
  CHECK(free_energy(mw, point) == doctest::Approx(-1.5).epsilon(1e-12));
}

TEST_CASE("isolated variables match the exact conditional marginals") {
  Rng rng(404);
  for (int t = 0; t < 20; ++t) {
    // Variable 0 isolated: only a unary weight; others form a random model.
    VariableSchema schema({2, 2, 2, 2, 2});
    Model m = init_unary_model(schema);
    std::vector<Feature> pairs;
    for_each_pairwise_candidate(schema, CandidatePolicy::NonReferenceStates,
                                [&](const Feature& f) {
                                  if (f.states()[0].variable == 0) return;
                                  if (rng.next_bernoulli(0.5)) pairs.push_back(f);
                                });
    m = activate_features(m, pairs);
    std::vector<double> w = m.weights();
    for (double& x : w) x = rng.next_uniform(-2, 2);
    m = m.with_weights(w);

    Instance inst = random_instance(rng, schema, 0.5);
    inst.hidden[0] = 1;
    MfResult r = mf_converge(m, inst, MfOptions{.max_sweeps = 500, .tol = 1e-12});
    JointTable table = exact_conditional(m, inst);
    auto marg = exact_marginals(table);
    CHECK(r.beliefs.prob(0, 1) == doctest::Approx(marg[0][1]).epsilon(1e-8));
  }
}

TEST_CASE("marginals stay normalized through converge and sweep") {
  Rng rng(505);
  for (int t = 0; t < 25; ++t) {
    Model m = random_model(rng, 2 + rng.next_int(6), 5.0);
    Instance inst = random_instance(rng, m.schema(), 0.5);
    MfResult r = mf_converge(m, inst);
    Marginals q1 = cd_sweep(m, inst, r.beliefs);
    for (const Marginals* q : {&r.beliefs, &q1}) {
      for (int k = 0; k < m.schema().variable_count(); ++k) {
        double sum = 0.0;
        for (double p : q->dist(k)) {
          CHECK(p >= 0.0);
          sum += p;
        }
        CHECK(std::abs(sum - 1.0) < 1e-9);
      }
    }
  }
}

TEST_SUITE_END();
