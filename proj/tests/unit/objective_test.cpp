#include <doctest.h>

#include <cmath>

#include "crflearn/mean_field.hpp"
#include "crflearn/objective.hpp"
#include "crflearn/rng.hpp"

using namespace crflearn;

namespace {

struct Fixture {
  Model model;
  std::vector<Marginals> q0s, q1s;
};

Fixture random_fixture(Rng& rng, int n, int instances, double weight_scale = 2.0) {
  VariableSchema schema(std::vector<int>(n, 2));
  Model m = init_unary_model(schema);
  std::vector<Feature> pairs;
  for_each_pairwise_candidate(schema, CandidatePolicy::NonReferenceStates,
                              [&](const Feature& f) {
                                if (rng.next_bernoulli(0.6)) pairs.push_back(f);
                              });
  m = activate_features(m, pairs);
  std::vector<double> w = m.weights();
  for (double& x : w) x = rng.next_uniform(-weight_scale, weight_scale);
  m = m.with_weights(w);

  Fixture fx{std::move(m), {}, {}};
  for (int i = 0; i < instances; ++i) {
    Instance inst;
    for (int k = 0; k < n; ++k) {
      inst.values.push_back(rng.next_int(2));
      inst.hidden.push_back(rng.next_bernoulli(0.5) ? 1 : 0);
    }
    MfResult r = mf_converge(fx.model, inst);
    fx.q1s.push_back(cd_sweep(fx.model, inst, r.beliefs));
    fx.q0s.push_back(std::move(r.beliefs));
  }
  return fx;
}

}  // namespace

TEST_SUITE_BEGIN("objective");

TEST_CASE("cd_term vanishes when q1 equals q0") {
  Rng rng(1);
  Fixture fx = random_fixture(rng, 4, 1);
  CHECK(cd_term(fx.model, fx.q0s[0], fx.q0s[0]) == 0.0);
}

TEST_CASE("cd_term with zero weights is the entropy gap") {
  Rng rng(2);
  Fixture fx = random_fixture(rng, 4, 1);
  Model zero = fx.model.with_weights(std::vector<double>(fx.model.feature_count(), 0.0));
  const double expected = entropy(fx.q0s[0]) - entropy(fx.q1s[0]);
  CHECK(cd_term(zero, fx.q0s[0], fx.q1s[0]) == doctest::Approx(expected).epsilon(1e-12));
}

TEST_CASE("the two algebraic forms of the cd term agree") {
  Rng rng(3);
  for (int t = 0; t < 30; ++t) {
    Fixture fx = random_fixture(rng, 6, 1);
    const double form1 = cd_term(fx.model, fx.q0s[0], fx.q1s[0]);
    // form2 = -w'g + H(q0) - H(q1) with g the per-feature expectation gap
    std::vector<double> g = active_gradient(fx.model, fx.q0s, fx.q1s);
    double wg = 0.0;
    for (std::size_t r = 0; r < g.size(); ++r) wg += fx.model.weight(r) * g[r];
    const double form2 = -wg + entropy(fx.q0s[0]) - entropy(fx.q1s[0]);
    CHECK(form1 == doctest::Approx(form2).epsilon(1e-12));
  }
}

TEST_CASE("active_gradient is zero when q1 equals q0") {
  Rng rng(4);
  Fixture fx = random_fixture(rng, 4, 3);
  std::vector<double> g = active_gradient(fx.model, fx.q0s, fx.q0s);
  for (double x : g) CHECK(x == 0.0);
}

TEST_CASE("active_gradient single-instance pairwise value") {
  VariableSchema schema({2, 2});
  Model m(schema);
  m = activate_features(m, std::vector<Feature>{canonical_pair(State{0, 1}, State{1, 1})});

  Marginals q0(schema), q1(schema);
  q0.set_dist(0, std::vector<double>{0.1, 0.9});
  q0.set_dist(1, std::vector<double>{0.1, 0.9});
  q1.set_dist(0, std::vector<double>{0.5, 0.5});
  q1.set_dist(1, std::vector<double>{0.5, 0.5});
  std::vector<Marginals> q0s{q0}, q1s{q1};
  std::vector<double> g = active_gradient(m, q0s, q1s);
  CHECK(g[0] == doctest::Approx(0.25 - 0.81).epsilon(1e-12));
}

TEST_CASE("active_gradient matches a componentwise recomputation") {
  Rng rng(5);
  Fixture fx = random_fixture(rng, 5, 3);
  std::vector<double> g = active_gradient(fx.model, fx.q0s, fx.q1s);
  for (std::size_t r = 0; r < fx.model.feature_count(); ++r) {
    double expected = 0.0;
    for (std::size_t i = 0; i < fx.q0s.size(); ++i) {
      double p0 = 1.0, p1 = 1.0;
      for (const State& st : fx.model.feature(r).states()) {
        p0 *= fx.q0s[i].prob(st.variable, st.value);
        p1 *= fx.q1s[i].prob(st.variable, st.value);
      }
      expected += p1 - p0;
    }
    CHECK(g[r] == doctest::Approx(expected).epsilon(1e-14));
  }
}

TEST_CASE("objective_value assembles the minimized total") {
  Model m = init_unary_model(VariableSchema({2, 2}));

  ObjectiveValue v0 = objective_value(m, 3.5, 2.0, 1.0);
  CHECK(v0.l1 == 0.0);
  CHECK(v0.l2 == 0.0);
  CHECK(v0.total == doctest::Approx(-3.5));

  ObjectiveValue v1 = objective_value(m.with_weights({0.5, -1.0}), 0.0, 2.0, 0.0);
  CHECK(v1.l1 == doctest::Approx(3.0));

  ObjectiveValue v2 = objective_value(m.with_weights({2.0, 0.0}), 0.0, 0.0, 1.0);
  CHECK(v2.l2 == doctest::Approx(2.0));
  CHECK(v2.total == doctest::Approx(2.0));
}

TEST_CASE("finite differences of the frozen smooth objective match the gradient") {
  Rng rng(6);
  Fixture fx = random_fixture(rng, 5, 4);
  const double lambda2 = 1.0;

  auto smooth_total = [&](const Model& m) {
    double cd = 0.0;
    for (std::size_t i = 0; i < fx.q0s.size(); ++i) cd += cd_term(m, fx.q0s[i], fx.q1s[i]);
    return -cd + lambda2 * l2_squared(m.weights()) / 2.0;
  };

  std::vector<double> g = active_gradient(fx.model, fx.q0s, fx.q1s);
  for (std::size_t r = 0; r < g.size(); ++r) g[r] += lambda2 * fx.model.weight(r);

  const double h = 1e-5;
  for (std::size_t r = 0; r < fx.model.feature_count(); ++r) {
    std::vector<double> w = fx.model.weights();
    w[r] += h;
    const double up = smooth_total(fx.model.with_weights(w));
    w[r] -= 2 * h;
    const double dn = smooth_total(fx.model.with_weights(w));
    const double fd = (up - dn) / (2 * h);
    CHECK(fd == doctest::Approx(g[r]).epsilon(1e-4));
  }
}

TEST_CASE("gradient of the L2 term alone is lambda2 * w") {
  Rng rng(7);
  Fixture fx = random_fixture(rng, 4, 2);
  // With q1 == q0 the expectation gap vanishes; only the L2 term remains.
  std::vector<double> g = active_gradient(fx.model, fx.q0s, fx.q0s);
  const double lambda2 = 0.7;
  for (std::size_t r = 0; r < g.size(); ++r) {
    CHECK(g[r] + lambda2 * fx.model.weight(r) ==
          doctest::Approx(lambda2 * fx.model.weight(r)).epsilon(1e-15));
  }
}

TEST_SUITE_END();
