#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <string>
#include <vector>

#include "crflearn/induction.hpp"
#include "crflearn/mean_field.hpp"
#include "crflearn/model.hpp"
#include "crflearn/owlqn.hpp"

namespace crflearn {

enum class TrainMode { Full, Grafting, Cfi };

TrainMode parse_train_mode(const std::string& name);
std::string train_mode_name(TrainMode mode);

struct TrainConfig {
  TrainMode mode = TrainMode::Cfi;
  double lambda1 = 2.0;
  double lambda2 = 1.0;
  int batch = 50;  // J: features added per induction step
  Thresholds thresholds{};
  MfOptions mf{};
  OwlqnConfig optimizer{};
  double rel_tol = 1e-4;
  int patience = 3;
  int max_iterations = 500;
  std::uint64_t seed = 0;  // echoed into artifacts; training itself is deterministic
  /// Optimize unary weights to convergence before inducing pairwise features
  /// (default: merged single stage).
  bool staged_unary = false;
  /// Gate for select_top; NaN means lambda1 (a candidate whose gradient
  /// magnitude is below the L1 penalty is stationary at weight 0).
  double gate = std::numeric_limits<double>::quiet_NaN();
  CandidatePolicy policy = CandidatePolicy::NonReferenceStates;
  int threads = 0;  // 0 = hardware concurrency

  double effective_gate() const { return std::isnan(gate) ? lambda1 : gate; }
  void validate() const;
};

struct TraceEntry {
  int iteration = 0;
  double objective = 0.0;       // minimized total at the post-step weights
  double l1_norm = 0.0;
  std::int64_t introduced = 0;  // cumulative feature count
  std::int64_t active = 0;      // non-zero weights
  double inference_seconds = 0.0;
  double scoring_seconds = 0.0;
  double optimizer_seconds = 0.0;
  std::uint64_t score_accumulations = 0;
  int mf_nonconverged = 0;      // instances whose q0 pass hit max_sweeps
  bool optimizer_stalled = false;
};

struct TrainTrace {
  std::vector<TraceEntry> entries;
  bool converged = false;
  std::string termination;  // "stable" | "stalled" | "max_iterations"
  double total_seconds = 0.0;
  std::uint64_t total_score_accumulations = 0;
};

struct TrainResult {
  Model model;
  TrainTrace trace;
};

/// True iff the last `patience` consecutive iteration pairs changed both the
/// objective and the weight L1 norm by at most rel_tol relative.
bool check_termination(const TrainTrace& trace, double rel_tol, int patience);

/// Trains on the dataset. Full mode activates every pairwise candidate up
/// front; grafting and cfi start from the unary model and add up to `batch`
/// top-scoring candidates per iteration. Each iteration recomputes q0/q1,
/// takes one orthant-wise quasi-Newton step on the frozen contrastive
/// objective, scores candidates from the same beliefs, and activates the
/// selected batch.
TrainResult train(const Dataset& data, const TrainConfig& config);

/// Optimizes the weights of a fixed feature set (no induction); the start
/// model's weights are used as the initial point.
TrainResult train_fixed(const Dataset& data, const Model& start, const TrainConfig& config);

}  // namespace crflearn
