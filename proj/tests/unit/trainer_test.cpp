#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "crflearn/datagen.hpp"
#include "crflearn/rng.hpp"
#include "crflearn/trainer.hpp"

using namespace crflearn;

namespace {

Dataset small_synthetic(int nodes, int samples, std::uint64_t seed, double degree = 2.0) {
  SyntheticSpec spec;
  spec.nodes = nodes;
  spec.degree = degree;
  spec.samples = samples;
  spec.burn_in = 200;
  spec.thinning = 10;
  spec.seed = seed;
  SyntheticSample truth = sample_structure(spec);
  return gibbs_chain(truth.truth, spec);
}

TrainConfig fast_config(TrainMode mode) {
  TrainConfig config;
  config.mode = mode;
  config.lambda1 = 0.5;
  config.lambda2 = 1.0;
  config.batch = 3;
  config.thresholds = Thresholds{0.05, 0.05};
  config.max_iterations = 60;
  config.threads = 1;
  return config;
}

}  // namespace

TEST_SUITE_BEGIN("trainer");

TEST_CASE("check_termination") {
  TrainTrace trace;
  auto push = [&](double obj, double l1) {
    TraceEntry e;
    e.objective = obj;
    e.l1_norm = l1;
    trace.entries.push_back(e);
  };

  // flat trace of length patience + 1
  for (int i = 0; i < 4; ++i) push(1.0, 2.0);
  CHECK(check_termination(trace, 1e-4, 3));

  // objective flat but the L1 norm still moving
  trace.entries.clear();
  push(1.0, 1.0);
  push(1.0, 2.0);
  push(1.0, 3.0);
  push(1.0, 4.0);
  CHECK(!check_termination(trace, 1e-4, 3));

  // alternating big and small deltas: needs `patience` consecutive stable pairs
  trace.entries.clear();
  push(1.0, 1.0);
  push(2.0, 1.0);
  push(2.0, 1.0);
  push(2.0, 1.0);
  CHECK(!check_termination(trace, 1e-4, 3));
  push(2.0, 1.0);
  CHECK(check_termination(trace, 1e-4, 3));

  // too short
  trace.entries.clear();
  push(1.0, 1.0);
  push(1.0, 1.0);
  CHECK(!check_termination(trace, 1e-4, 3));
}

TEST_CASE("a penalty above every candidate gradient keeps the unary model") {
  Dataset data = small_synthetic(5, 24, 77);
  TrainConfig config = fast_config(TrainMode::Grafting);
  config.lambda1 = 100.0;  // gates every candidate and freezes every weight
  TrainResult r = train(data, config);
  CHECK(r.model.feature_count() == 5);
  for (double w : r.model.weights()) CHECK(w == 0.0);
  CHECK(r.trace.converged);
  CHECK(r.trace.termination == "stalled");
  CHECK(static_cast<int>(r.trace.entries.size()) == config.patience);
}

TEST_CASE("feature growth is bounded by the batch size") {
  Dataset data = small_synthetic(6, 30, 5);
  for (TrainMode mode : {TrainMode::Grafting, TrainMode::Cfi}) {
    TrainConfig config = fast_config(mode);
    config.lambda1 = 0.2;
    TrainResult r = train(data, config);
    std::int64_t prev = 6;
    for (const TraceEntry& e : r.trace.entries) {
      CHECK(e.introduced - prev <= config.batch);
      CHECK(e.introduced >= prev);
      CHECK(e.active <= e.introduced);
      prev = e.introduced;
    }
  }
}

TEST_CASE("full mode activates every candidate up front") {
  Dataset data = small_synthetic(5, 20, 9);
  TrainConfig config = fast_config(TrainMode::Full);
  TrainResult r = train(data, config);
  CHECK(r.model.feature_count() == 5 + 10);
  CHECK(r.trace.entries.front().introduced == 15);
}

TEST_CASE("training is deterministic bit for bit") {
  Dataset data = small_synthetic(6, 24, 13);
  for (TrainMode mode : {TrainMode::Full, TrainMode::Grafting, TrainMode::Cfi}) {
    TrainConfig config = fast_config(mode);
    TrainResult a = train(data, config);
    TrainResult b = train(data, config);
    REQUIRE(a.model.feature_count() == b.model.feature_count());
    for (std::size_t r2 = 0; r2 < a.model.feature_count(); ++r2) {
      CHECK(a.model.weight(r2) == b.model.weight(r2));
      CHECK(a.model.feature(r2) == b.model.feature(r2));
    }
    REQUIRE(a.trace.entries.size() == b.trace.entries.size());
    for (std::size_t i = 0; i < a.trace.entries.size(); ++i) {
      CHECK(a.trace.entries[i].objective == b.trace.entries[i].objective);
      CHECK(a.trace.entries[i].l1_norm == b.trace.entries[i].l1_norm);
      CHECK(a.trace.entries[i].introduced == b.trace.entries[i].introduced);
    }
  }
}

TEST_CASE("thread count does not change the result") {
  Dataset data = small_synthetic(6, 40, 21);
  TrainConfig config = fast_config(TrainMode::Cfi);
  config.threads = 1;
  TrainResult a = train(data, config);
  config.threads = 4;
  TrainResult b = train(data, config);
  REQUIRE(a.model.feature_count() == b.model.feature_count());
  for (std::size_t r2 = 0; r2 < a.model.feature_count(); ++r2) {
    CHECK(a.model.weight(r2) == b.model.weight(r2));
  }
  for (std::size_t i = 0; i < a.trace.entries.size(); ++i) {
    CHECK(a.trace.entries[i].objective == b.trace.entries[i].objective);
  }
}

TEST_CASE("full and incremental modes reach the same unregularized objective") {
  Dataset data = small_synthetic(4, 20, 3);
  double finals[3];
  int idx = 0;
  for (TrainMode mode : {TrainMode::Full, TrainMode::Grafting, TrainMode::Cfi}) {
    TrainConfig config = fast_config(mode);
    config.lambda1 = 0.0;
    config.gate = 0.0;
    config.thresholds = Thresholds{0.0, 0.0};
    config.batch = 2;
    config.max_iterations = 400;
    config.rel_tol = 1e-7;
    TrainResult r = train(data, config);
    // all candidates eventually enter in every mode
    CHECK(r.model.feature_count() == 4 + 6);
    finals[idx++] = r.trace.entries.back().objective;
  }
  CHECK(finals[1] == doctest::Approx(finals[0]).epsilon(1e-3));
  CHECK(finals[2] == doctest::Approx(finals[0]).epsilon(1e-3));
}

TEST_CASE("cfi and grafting select the same features under zero error sums") {
  // Flip-closed data under the all-value-pairs policy keeps the model exactly
  // value-flip symmetric, so per-state error sums vanish at every iteration
  // (the converged-unary premise) and the sparse scores equal the exact ones.
  VariableSchema schema(std::vector<int>(6, 2));
  std::vector<Instance> instances;
  SyntheticSpec spec;
  spec.nodes = 6;
  spec.degree = 2.0;
  spec.samples = 12;
  spec.burn_in = 300;
  spec.thinning = 20;
  spec.seed = 19;
  SyntheticSample truth = sample_structure(spec);
  Dataset base = gibbs_chain(truth.truth, spec);
  for (const Instance& inst : base.instances()) {
    instances.push_back(inst);
    Instance flipped = inst;
    for (int k = 0; k < 6; ++k) flipped.values[k] = 1 - flipped.values[k];
    instances.push_back(flipped);
  }
  Dataset data(schema, instances);

  auto feature_set_at = [&](TrainMode mode, int horizon) {
    TrainConfig config = fast_config(mode);
    config.policy = CandidatePolicy::AllValuePairs;
    config.lambda1 = 0.05;
    config.thresholds = Thresholds{0.0, 0.0};
    config.batch = 60;  // room for every candidate that clears the gate
    config.max_iterations = horizon;
    TrainResult r = train(data, config);
    std::vector<Feature> features = r.model.features();
    std::sort(features.begin(), features.end());
    return features;
  };

  for (int horizon = 1; horizon <= 5; ++horizon) {
    CHECK(feature_set_at(TrainMode::Grafting, horizon) ==
          feature_set_at(TrainMode::Cfi, horizon));
  }
}

TEST_CASE("train_fixed optimizes a given structure without induction") {
  SyntheticSpec spec;
  spec.nodes = 5;
  spec.degree = 2.0;
  spec.samples = 30;
  spec.burn_in = 200;
  spec.thinning = 10;
  spec.seed = 37;
  SyntheticSample truth = sample_structure(spec);
  Dataset data = gibbs_chain(truth.truth, spec);

  // start from the truth structure with zeroed weights
  Model start = truth.truth.with_weights(std::vector<double>(truth.truth.feature_count(), 0.0));
  TrainConfig config = fast_config(TrainMode::Full);
  config.lambda1 = 0.1;
  config.max_iterations = 100;
  TrainResult r = train_fixed(data, start, config);
  CHECK(r.model.feature_count() == start.feature_count());
  // learned pairwise weights align with the generating weights
  double alignment = 0.0;
  for (std::size_t f = 0; f < r.model.feature_count(); ++f) {
    if (r.model.feature(f).kind() == FeatureKind::Pairwise) {
      alignment += r.model.weight(f) * truth.truth.weight(f);
    }
  }
  CHECK(alignment > 0.0);
}

TEST_CASE("staged unary schedule still trains") {
  Dataset data = small_synthetic(5, 20, 41);
  TrainConfig config = fast_config(TrainMode::Cfi);
  config.staged_unary = true;
  TrainResult r = train(data, config);
  CHECK(r.model.feature_count() >= 5);
  CHECK(!r.trace.entries.empty());
}

TEST_CASE("trace bookkeeping") {
  Dataset data = small_synthetic(5, 16, 53);
  TrainConfig config = fast_config(TrainMode::Cfi);
  TrainResult r = train(data, config);
  std::int64_t prev_introduced = 0;
  for (std::size_t i = 0; i < r.trace.entries.size(); ++i) {
    const TraceEntry& e = r.trace.entries[i];
    CHECK(e.iteration == static_cast<int>(i));
    CHECK(e.introduced >= prev_introduced);
    prev_introduced = e.introduced;
    CHECK(e.inference_seconds >= 0.0);
  }
  CHECK(r.trace.total_seconds > 0.0);
}

TEST_SUITE_END();
