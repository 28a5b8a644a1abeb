#pragma once

#include <cstdint>
#include <deque>
#include <functional>
#include <span>
#include <vector>

namespace crflearn {

struct OwlqnConfig {
  int memory = 10;                  // number of (s, y) correction pairs kept
  double armijo_c = 1e-4;           // sufficient-decrease constant
  double backtrack = 0.5;           // step shrink factor
  int max_line_search_steps = 30;
  /// Clear curvature memory whenever the problem dimension grows.
  bool reset_memory_on_extend = false;
};

/// Ring of limited-memory quasi-Newton correction pairs with a curvature
/// guard: pairs with s'y <= 1e-12 are rejected.
class LbfgsMemory {
 public:
  explicit LbfgsMemory(int capacity) : capacity_(capacity) {}

  bool push(std::vector<double> s, std::vector<double> y);
  void clear() { pairs_.clear(); }
  std::size_t size() const { return pairs_.size(); }
  bool empty() const { return pairs_.empty(); }
  /// Appends zero coordinates to every stored vector.
  void extend(std::size_t new_dimension);

  /// Two-loop recursion: the quasi-Newton descent direction for gradient g
  /// (returns -g when empty). No orthant alignment here.
  std::vector<double> two_loop(std::span<const double> g) const;

 private:
  struct Pair {
    std::vector<double> s, y;
    double rho;  // 1 / (s'y)
  };
  int capacity_;
  std::deque<Pair> pairs_;
};

/// L1 subdifferential surrogate: steepest-descent direction generator of
/// smooth + lambda1*||w||_1 (negated). Coordinates at zero whose smooth
/// gradient lies within [-lambda1, lambda1] are stationary and get 0.
std::vector<double> pseudo_gradient(std::span<const double> theta,
                                    std::span<const double> smooth_grad, double lambda1);

/// Two-loop direction for the pseudo-gradient, then orthant alignment: every
/// coordinate whose direction disagrees in sign with the steepest-descent
/// direction -pgrad is zeroed. Guarantees d_k * pgrad_k <= 0.
std::vector<double> search_direction(const LbfgsMemory& memory, std::span<const double> pgrad);

struct StepResult {
  std::vector<double> theta;
  bool accepted = false;
  bool stalled = false;     // line search exhausted; theta returned unchanged
  bool stationary = false;  // pseudo-gradient was exactly zero
  double alpha = 0.0;       // accepted step length
  std::vector<double> orthant;  // sign pattern the step was constrained to
};

/// Evaluates the smooth part of the objective at a candidate point.
using SmoothValueFn = std::function<double(std::span<const double>)>;

/// Backtracking line search constrained to the orthant chosen from theta and
/// pgrad; candidate points are projected (coordinates leaving the orthant are
/// zeroed exactly) and accepted on an Armijo decrease of smooth + L1.
StepResult orthant_step(std::span<const double> theta, std::span<const double> direction,
                        std::span<const double> pgrad, const SmoothValueFn& smooth_value,
                        double lambda1, const OwlqnConfig& config, bool scale_first_step);

/// Orthant-wise limited-memory quasi-Newton minimizer of
///   smooth(theta) + lambda1 * ||theta||_1.
/// One call to iterate() performs one pseudo-gradient -> direction ->
/// constrained line search cycle; curvature pairs are formed from consecutive
/// calls. With lambda1 == 0 it reduces to plain L-BFGS with Armijo
/// backtracking (no orthant constraint).
class Owlqn {
 public:
  explicit Owlqn(OwlqnConfig config = {});

  StepResult iterate(std::span<const double> theta, std::span<const double> smooth_grad,
                     const SmoothValueFn& smooth_value, double lambda1);

  /// Grows the problem dimension; history vectors are padded with zeros (or
  /// dropped, per config.reset_memory_on_extend).
  void extend(std::size_t new_dimension);

  void reset();
  const LbfgsMemory& memory() const { return memory_; }
  LbfgsMemory& memory() { return memory_; }
  int iterations() const { return iterations_; }

 private:
  OwlqnConfig config_;
  LbfgsMemory memory_;
  bool has_previous_ = false;
  std::vector<double> prev_theta_;
  std::vector<double> prev_grad_;
  int iterations_ = 0;
};

}  // namespace crflearn
