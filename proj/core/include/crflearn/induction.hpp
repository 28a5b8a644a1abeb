#pragma once

#include <cstdint>
#include <span>
#include <unordered_map>
#include <vector>

#include "crflearn/mean_field.hpp"
#include "crflearn/model.hpp"

namespace crflearn {

struct Thresholds {
  double t_err = 0.2;
  double t_sig = 0.2;
};

/// Per-(instance, candidate state) error and signal values with per-state
/// means. err = q1 - q0 is the one-step prediction residue; sig_t = q_t - E_t
/// is the deviation from the across-instance mean under q_t.
class SignalErrorTable {
 public:
  SignalErrorTable() = default;
  SignalErrorTable(const VariableSchema& schema, CandidatePolicy policy,
                   std::span<const Marginals> q0s, std::span<const Marginals> q1s,
                   int threads = 1);

  int instance_count() const { return instances_; }
  int state_count() const { return static_cast<int>(states_.size()); }
  State state(int s) const { return states_[s]; }
  const std::vector<State>& states() const { return states_; }

  double q0(int instance, int s) const { return q0_[idx(instance, s)]; }
  double q1(int instance, int s) const { return q1_[idx(instance, s)]; }
  double err(int instance, int s) const { return q1_[idx(instance, s)] - q0_[idx(instance, s)]; }
  double sig0(int instance, int s) const { return q0_[idx(instance, s)] - mean0_[s]; }
  double sig1(int instance, int s) const { return q1_[idx(instance, s)] - mean1_[s]; }
  double avg_sig(int instance, int s) const { return 0.5 * (sig0(instance, s) + sig1(instance, s)); }
  double mean0(int s) const { return mean0_[s]; }
  double mean1(int s) const { return mean1_[s]; }

 private:
  // State-major storage: row s holds the per-instance values of state s.
  std::size_t idx(int instance, int s) const {
    return static_cast<std::size_t>(s) * instances_ + instance;
  }
  int instances_ = 0;
  std::vector<State> states_;
  std::vector<double> q0_, q1_;
  std::vector<double> mean0_, mean1_;
};

SignalErrorTable build_signal_error_table(std::span<const Marginals> q0s,
                                          std::span<const Marginals> q1s,
                                          const VariableSchema& schema, CandidatePolicy policy,
                                          int threads = 1);

/// The two algebraically equal ways of writing one instance's candidate-pair
/// gradient q1A*q1B - q0A*q0B in terms of errors, signals and means. The
/// symmetric form assumes the q0 and q1 means of each state coincide (the
/// converged-unary regime), so signals under q1 are taken against the q0 mean.
struct PairGradientTerms {
  double err_a_sig_b = 0.0;   // err(A) * sig0(B)
  double err_b_sig_a = 0.0;   // err(B) * sig0(A)
  double err_err = 0.0;       // err(A) * err(B)
  double err_a_mean_b = 0.0;  // err(A) * E0[B]
  double err_b_mean_a = 0.0;  // err(B) * E0[A]
  double sum = 0.0;           // q1A*q1B - q0A*q0B

  double symmetric_a = 0.0;   // (sig0(A)+sig1(A))/2 * err(B)
  double symmetric_b = 0.0;   // (sig0(B)+sig1(B))/2 * err(A)
  double symmetric_sum = 0.0; // symmetric terms + mean terms
};

PairGradientTerms decompose_pair_gradient(double q0A, double q0B, double q1A, double q1B,
                                          double E0A, double E0B);

/// Sparse accumulator over canonical pairwise candidates. Exact zeros are
/// dropped when reading entries out.
class ScoreMap {
 public:
  void add(State a, State b, double value);
  double get(State a, State b) const;
  std::size_t size() const;
  bool empty() const { return size() == 0; }

  /// Entries in canonical feature order, zero entries dropped.
  std::vector<std::pair<Feature, double>> entries() const;

  /// Copy without the features already present in `model`.
  ScoreMap without_active(const Model& model) const;

  void merge(const ScoreMap& other);

 private:
  static std::uint64_t pack(State a, State b);
  static std::pair<State, State> unpack(std::uint64_t key);
  std::unordered_map<std::uint64_t, double> scores_;
};

struct ScoreStats {
  std::uint64_t accumulations = 0;  // candidate-instance score updates performed
  std::uint64_t err_states = 0;     // total |S_err(i)| over instances (CFI only)
  std::uint64_t sig_states = 0;     // total |S_sig(i)| over instances (CFI only)
};

/// Exact candidate gradients: score(f) = sum_i [ <f>_{q1^i} - <f>_{q0^i} ]
/// for every inactive pairwise candidate of the model's policy.
ScoreMap grafting_scores(const Model& model, std::span<const Marginals> q0s,
                         std::span<const Marginals> q1s, ScoreStats* stats = nullptr,
                         int threads = 1);

/// Same, restricted to an explicit candidate list (must be inactive pairwise
/// features).
ScoreMap grafting_scores(const Model& model, std::span<const Marginals> q0s,
                         std::span<const Marginals> q1s, std::span<const Feature> candidates,
                         ScoreStats* stats = nullptr);

/// Sparse gradient approximation: per instance, gate states into
/// S_err = { |err| > t_err } and S_sig = { |(sig0+sig1)/2| > t_sig }, then for
/// every (A in S_sig, B in S_err) on distinct variables accumulate
/// (sig0(A)+sig1(A))/2 * err(B) into the canonical pair.
ScoreMap cfi_scores(const SignalErrorTable& table, const Thresholds& thresholds,
                    ScoreStats* stats = nullptr, int threads = 1);

/// Mean-correction owed by the sparse scores relative to the exact gradient
/// of pair (A, B): the across-instance error sums weighted by the symmetric
/// state means. Zero when per-state error sums vanish.
double cfi_mean_correction(const SignalErrorTable& table, int state_a, int state_b);

/// Top-J features by |score|, gated at |score| > gate; ties broken toward the
/// smaller canonical feature.
std::vector<Feature> select_top(const ScoreMap& scores, int j, double gate);

struct HigherOrderGradient {
  double direct = 0.0;    // prod q1 - prod q0
  double expanded = 0.0;  // subset expansion of prod (q0 + err) - prod q0
};

/// Gradient of a k >= 3 indicator candidate under factorized beliefs, both as
/// the direct product difference and as the error-expansion over state
/// subsets (the two must agree).
HigherOrderGradient higher_order_gradient(std::span<const State> states, const Marginals& q0,
                                          const Marginals& q1);

}  // namespace crflearn
