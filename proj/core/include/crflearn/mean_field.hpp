#pragma once

#include <span>
#include <vector>

#include "crflearn/model.hpp"

namespace crflearn {

/// Fully factorized belief state: one probability vector per variable, plus a
/// clamped flag for variables fixed to a point mass.
class Marginals {
 public:
  Marginals() = default;
  /// All variables free and uniform.
  explicit Marginals(const VariableSchema& schema);

  int variable_count() const { return static_cast<int>(cardinalities_.size()); }
  int cardinality(int variable) const { return cardinalities_[variable]; }

  double prob(int variable, int value) const { return probs_[offsets_[variable] + value]; }
  std::span<const double> dist(int variable) const {
    return {probs_.data() + offsets_[variable], static_cast<std::size_t>(cardinalities_[variable])};
  }
  std::span<double> mutable_dist(int variable) {
    return {probs_.data() + offsets_[variable], static_cast<std::size_t>(cardinalities_[variable])};
  }

  bool clamped(int variable) const { return clamped_[variable] != 0; }
  void clamp(int variable, int value);
  void unclamp_all();

  /// Replaces variable `variable`'s distribution (caller provides a
  /// normalized vector) and marks it free.
  void set_dist(int variable, std::span<const double> dist);

 private:
  std::vector<int> cardinalities_;
  std::vector<int> offsets_;
  std::vector<double> probs_;
  std::vector<std::uint8_t> clamped_;
};

struct MfOptions {
  int max_sweeps = 100;
  double tol = 1e-6;
  /// Record the free energy after every sweep (costs one expectation pass per
  /// sweep; off in production loops).
  bool track_free_energy = false;
};

struct MfResult {
  Marginals beliefs;
  bool converged = true;
  int sweeps = 0;
  std::vector<double> sweep_free_energy;  // filled when track_free_energy
};

/// One coordinate update of the fixed-point equations: the new distribution of
/// variable k given all other marginals, proportional to
/// exp(sum of incident weights times the product of the other member
/// marginals). Values with no incident features get exp(0) mass.
std::vector<double> update_variable(const Model& model, const Marginals& beliefs, int k);

/// Mean-field fixed point with the instance's observed variables clamped and
/// hidden variables updated by sequential sweeps in ascending variable order.
/// Stops when the largest per-entry change in a full sweep drops below tol.
MfResult mf_converge(const Model& model, const Instance& instance, const MfOptions& options = {});

/// One contrastive-divergence reconstruction sweep: start from q0, free every
/// variable, and apply exactly one sequential update sweep in ascending order.
Marginals cd_sweep(const Model& model, const Instance& instance, const Marginals& q0);

/// Probability that the feature fires: product of its member marginals.
double expect_feature(const Feature& f, const Marginals& beliefs);

/// Expectations of all model features under `beliefs`, in feature order.
std::vector<double> feature_expectations(const Model& model, const Marginals& beliefs);

/// Shannon entropy (nats) over free variables; clamped variables contribute 0.
double entropy(const Marginals& beliefs);

/// Variational free energy: minus expected score minus entropy.
double free_energy(const Model& model, const Marginals& beliefs);

}  // namespace crflearn
