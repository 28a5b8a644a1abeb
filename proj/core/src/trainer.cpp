#include "crflearn/trainer.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <stdexcept>

#include "crflearn/objective.hpp"
#include "crflearn/parallel.hpp"

namespace crflearn {

TrainMode parse_train_mode(const std::string& name) {
  if (name == "full") return TrainMode::Full;
  if (name == "grafting") return TrainMode::Grafting;
  if (name == "cfi") return TrainMode::Cfi;
  throw std::invalid_argument("unknown training mode: " + name);
}

std::string train_mode_name(TrainMode mode) {
  switch (mode) {
    case TrainMode::Full: return "full";
    case TrainMode::Grafting: return "grafting";
    case TrainMode::Cfi: return "cfi";
  }
  return "?";
}

void TrainConfig::validate() const {
  if (lambda1 < 0.0 || lambda2 < 0.0) throw std::invalid_argument("penalties must be >= 0");
  if (batch < 1) throw std::invalid_argument("batch size must be >= 1");
  if (patience < 1) throw std::invalid_argument("patience must be >= 1");
  if (rel_tol <= 0.0) throw std::invalid_argument("rel_tol must be > 0");
  if (max_iterations < 1) throw std::invalid_argument("max_iterations must be >= 1");
  if (thresholds.t_err < 0.0 || thresholds.t_sig < 0.0) {
    throw std::invalid_argument("thresholds must be >= 0");
  }
}

namespace {

bool entries_stable(std::span<const TraceEntry> e, double rel_tol, int patience) {
  if (static_cast<int>(e.size()) < patience + 1) return false;
  for (int p = 0; p < patience; ++p) {
    const TraceEntry& now = e[e.size() - 1 - p];
    const TraceEntry& before = e[e.size() - 2 - p];
    const bool obj_small =
        std::abs(now.objective - before.objective) <= rel_tol * (1.0 + std::abs(now.objective));
    const bool l1_small =
        std::abs(now.l1_norm - before.l1_norm) <= rel_tol * (1.0 + now.l1_norm);
    if (!obj_small || !l1_small) return false;
  }
  return true;
}

bool window_stable(const TrainTrace& trace, std::size_t window_start, double rel_tol,
                   int patience) {
  const auto& e = trace.entries;
  return entries_stable(std::span<const TraceEntry>(e.data() + window_start,
                                                    e.size() - window_start),
                        rel_tol, patience);
}

}  // namespace

bool check_termination(const TrainTrace& trace, double rel_tol, int patience) {
  return entries_stable(trace.entries, rel_tol, patience);
}

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

struct InferenceSums {
  std::vector<double> e0, e1;  // per-feature expectation sums over instances
  double h0 = 0.0, h1 = 0.0;   // entropy sums
  int nonconverged = 0;
};

// One inference pass: q0 fixed point and q1 reconstruction sweep for every
// instance, reduced into per-feature expectation sums (deterministic block
// order).
InferenceSums infer_sums(const Model& model, const Dataset& data, const MfOptions& mf,
                         int threads, std::vector<Marginals>* q0s, std::vector<Marginals>* q1s) {
  const std::size_t n_features = model.feature_count();
  q0s->resize(data.size());
  q1s->resize(data.size());
  return block_mapreduce<InferenceSums>(
      data.size(), threads,
      InferenceSums{std::vector<double>(n_features, 0.0), std::vector<double>(n_features, 0.0)},
      [&](std::size_t lo, std::size_t hi) {
        InferenceSums part{std::vector<double>(n_features, 0.0),
                           std::vector<double>(n_features, 0.0)};
        for (std::size_t i = lo; i < hi; ++i) {
          MfResult r = mf_converge(model, data.instance(i), mf);
          part.nonconverged += !r.converged;
          Marginals q1 = cd_sweep(model, data.instance(i), r.beliefs);
          const std::vector<double> f0 = feature_expectations(model, r.beliefs);
          const std::vector<double> f1 = feature_expectations(model, q1);
          for (std::size_t r2 = 0; r2 < n_features; ++r2) {
            part.e0[r2] += f0[r2];
            part.e1[r2] += f1[r2];
          }
          part.h0 += entropy(r.beliefs);
          part.h1 += entropy(q1);
          (*q0s)[i] = std::move(r.beliefs);
          (*q1s)[i] = std::move(q1);
        }
        return part;
      },
      [](InferenceSums& acc, InferenceSums&& p) {
        for (std::size_t r = 0; r < acc.e0.size(); ++r) {
          acc.e0[r] += p.e0[r];
          acc.e1[r] += p.e1[r];
        }
        acc.h0 += p.h0;
        acc.h1 += p.h1;
        acc.nonconverged += p.nonconverged;
      });
}

struct LoopOptions {
  bool induce = false;
};

// The shared outer loop; appends to trace and returns the final model.
Model run_loop(const Dataset& data, Model model, Owlqn& optimizer, const TrainConfig& config,
               LoopOptions loop, TrainTrace& trace) {
  const int threads = config.threads;
  const std::size_t window_start = trace.entries.size();
  int stall_streak = 0;
  std::vector<Marginals> q0s, q1s;

  for (int iteration = 0; iteration < config.max_iterations; ++iteration) {
    TraceEntry entry;
    entry.iteration = static_cast<int>(trace.entries.size());

    // (1) inference at the current weights
    auto t_inf = Clock::now();
    InferenceSums sums = infer_sums(model, data, config.mf, threads, &q0s, &q1s);
    entry.inference_seconds = seconds_since(t_inf);
    entry.mf_nonconverged = sums.nonconverged;

    // (2)+(3) one optimizer step on the frozen contrastive objective:
    //   smooth(theta) = theta'(e1 - e0) + h1 - h0 + lambda2 ||theta||^2 / 2
    const std::size_t n = model.feature_count();
    std::vector<double> grad_linear(n);
    for (std::size_t r = 0; r < n; ++r) grad_linear[r] = sums.e1[r] - sums.e0[r];
    const double entropy_gap = sums.h1 - sums.h0;

    auto smooth_value = [&](std::span<const double> theta) {
      double lin = 0.0, sq = 0.0;
      for (std::size_t r = 0; r < theta.size(); ++r) {
        lin += theta[r] * grad_linear[r];
        sq += theta[r] * theta[r];
      }
      return lin + entropy_gap + config.lambda2 * sq / 2.0;
    };

    std::vector<double> smooth_grad(n);
    const std::vector<double>& theta = model.weights();
    for (std::size_t r = 0; r < n; ++r) {
      smooth_grad[r] = grad_linear[r] + config.lambda2 * theta[r];
    }

    auto t_opt = Clock::now();
    StepResult step = optimizer.iterate(theta, smooth_grad, smooth_value, config.lambda1);
    entry.optimizer_seconds = seconds_since(t_opt);
    entry.optimizer_stalled = step.stalled;
    model = model.with_weights(std::move(step.theta));

    // Objective at the post-step weights under this iteration's beliefs.
    // Features activated below enter at weight 0 and leave it unchanged.
    const double cd_sum = -(smooth_value(model.weights()) -
                            config.lambda2 * l2_squared(model.weights()) / 2.0);
    const ObjectiveValue objective =
        objective_value(model, cd_sum, config.lambda1, config.lambda2);

    // (4)+(5) candidate scoring and activation from the same beliefs
    std::size_t added = 0;
    if (loop.induce) {
      auto t_score = Clock::now();
      ScoreStats stats;
      ScoreMap scores;
      if (config.mode == TrainMode::Grafting) {
        scores = grafting_scores(model, q0s, q1s, &stats, threads);
      } else {
        SignalErrorTable table =
            build_signal_error_table(q0s, q1s, model.schema(), config.policy, threads);
        scores = cfi_scores(table, config.thresholds, &stats, threads).without_active(model);
      }
      const std::vector<Feature> picked =
          select_top(scores, config.batch, config.effective_gate());
      entry.scoring_seconds = seconds_since(t_score);
      entry.score_accumulations = stats.accumulations;
      trace.total_score_accumulations += stats.accumulations;
      if (!picked.empty()) {
        model = activate_features(model, picked);
        added = model.feature_count() - n;
        optimizer.extend(model.feature_count());
      }
    }

    // (6) bookkeeping and termination
    entry.objective = objective.total;
    entry.l1_norm = l1_norm(model.weights());
    entry.introduced = static_cast<std::int64_t>(model.feature_count());
    entry.active = static_cast<std::int64_t>(model.active_count());
    trace.entries.push_back(entry);

    if ((step.stalled || step.stationary) && added == 0) {
      ++stall_streak;
    } else {
      stall_streak = 0;
    }
    if (stall_streak >= config.patience) {
      trace.converged = true;
      trace.termination = "stalled";
      return model;
    }
    // Fresh features change the problem; the stability window only counts
    // iterations of this loop with no additions at its tail.
    if (added == 0 && window_stable(trace, window_start, config.rel_tol, config.patience)) {
      trace.converged = true;
      trace.termination = "stable";
      return model;
    }
  }
  trace.converged = false;
  trace.termination = "max_iterations";
  return model;
}

}  // namespace

TrainResult train(const Dataset& data, const TrainConfig& config) {
  config.validate();
  if (data.size() == 0) throw std::invalid_argument("dataset is empty");
  const auto start = Clock::now();

  Model model = init_unary_model(data.schema(), config.policy);
  if (config.mode == TrainMode::Full) {
    model = activate_features(model, pairwise_candidates(data.schema(), config.policy));
  }

  Owlqn optimizer(config.optimizer);
  TrainTrace trace;
  LoopOptions loop{.induce = config.mode != TrainMode::Full};

  if (loop.induce && config.staged_unary) {
    // Stage one: unary weights to convergence, no induction.
    model = run_loop(data, model, optimizer, config, LoopOptions{.induce = false}, trace);
  }

  Model final_model = run_loop(data, std::move(model), optimizer, config, loop, trace);
  trace.total_seconds = seconds_since(start);
  return TrainResult{std::move(final_model), std::move(trace)};
}

TrainResult train_fixed(const Dataset& data, const Model& start, const TrainConfig& config) {
  config.validate();
  if (data.size() == 0) throw std::invalid_argument("dataset is empty");
  if (!(start.schema() == data.schema())) {
    throw std::invalid_argument("start model schema does not match dataset");
  }
  const auto t0 = Clock::now();
  Owlqn optimizer(config.optimizer);
  TrainTrace trace;
  Model final_model =
      run_loop(data, start, optimizer, config, LoopOptions{.induce = false}, trace);
  trace.total_seconds = seconds_since(t0);
  return TrainResult{std::move(final_model), std::move(trace)};
}

}  // namespace crflearn
