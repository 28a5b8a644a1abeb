#pragma once

#include <cstdint>
#include <stdexcept>
#include <vector>

#include "crflearn/mean_field.hpp"
#include "crflearn/model.hpp"

namespace crflearn {

/// Thrown when a requested enumeration exceeds the joint-state-space limit.
class EnumerationLimitError : public std::runtime_error {
 public:
  EnumerationLimitError(std::uint64_t size, std::uint64_t limit);
  std::uint64_t size() const { return size_; }

 private:
  std::uint64_t size_;
};

inline constexpr std::uint64_t kEnumerationLimit = 1u << 20;

/// Exact joint distribution of the free variables of one instance, by brute
/// enumeration. Assignments are indexed in mixed-radix order over the free
/// variables (first free variable least significant).
struct JointTable {
  VariableSchema schema;
  std::vector<int> free_variables;          // ascending
  std::vector<int> clamped_values;          // full length; free slots hold the instance value too
  std::vector<std::uint8_t> is_free;        // per variable
  std::vector<double> probs;                // size = product of free cardinalities
  double log_z = 0.0;
  double z = 0.0;

  std::uint64_t assignment_count() const { return probs.size(); }
  /// Decodes assignment `index` into a full values vector (clamped variables
  /// at their clamped values).
  std::vector<int> assignment(std::uint64_t index) const;
  double prob(std::uint64_t index) const { return probs[index]; }
};

/// Exact conditional distribution with the instance's observed variables
/// clamped. Throws EnumerationLimitError when the free space exceeds 2^20.
JointTable exact_conditional(const Model& model, const Instance& instance);

/// Per-variable exact marginals of a joint table (clamped variables come out
/// as point masses).
std::vector<std::vector<double>> exact_marginals(const JointTable& table);

struct CllGradient {
  double cll = 0.0;                  // log p(labels | observation)
  std::vector<double> gradient;      // <f>_free - <f>_clamped, per feature
};

/// Exact conditional log-likelihood of the instance's observed labels and the
/// matching feature-expectation gap (free minus clamped), via two
/// enumerations. The gap is the gradient of the minimized objective -cll.
CllGradient exact_cll_and_gradient(const Model& model, const Instance& instance);

/// KL(q || p) with p the exact conditional of `table`; non-negative.
double kl_to_exact(const Marginals& beliefs, const JointTable& table, const Model& model);

}  // namespace crflearn
