#pragma once

#include <cstdint>
#include <vector>

#include "crflearn/mean_field.hpp"
#include "crflearn/model.hpp"

namespace crflearn {

/// One cross-validation fold: the (instance, variable) label slots this fold
/// hides. The folds of one split are an exact partition of all slots.
struct CvSplit {
  int fold = 0;
  std::vector<std::vector<std::uint8_t>> hidden;  // per instance, per variable

  bool hides(std::size_t instance, int variable) const {
    return hidden[instance][variable] != 0;
  }
};

/// Randomly partitions all M*N label slots into `folds` near-equal groups;
/// fold k hides group k. With folds = 1/fraction each fold hides `fraction`
/// of the labels.
std::vector<CvSplit> make_splits(const Dataset& data, int folds, double fraction,
                                 std::uint64_t seed);

/// Copy of the dataset with the fold's slots marked hidden (union with any
/// pre-existing hidden marks).
Dataset apply_split(const Dataset& data, const CvSplit& split);

struct EvalReport {
  double cll = 0.0;         // average conditional log-likelihood per hidden slot
  double auc = 0.0;         // precision-recall area in [0, 1]
  double error_rate = 0.0;  // in [0, 1]
  double wall_seconds = 0.0;
  std::int64_t introduced_features = 0;
  std::int64_t active_features = 0;
  std::int64_t hidden_slots = 0;
};

/// Average log q0(true value) per hidden slot, with observed labels clamped
/// and beliefs from the mean-field fixed point. Probabilities are floored at
/// 1e-12 before the log. Always <= 0.
double conditional_log_likelihood(const Model& model, const Dataset& data,
                                  const MfOptions& options = {}, int threads = 1);

/// Area under the precision-recall curve over all (hidden variable, value)
/// states pooled across instances, ranked by q0 and integrated by the
/// average-precision step rule. Ties rank by (instance, variable, value).
double pr_auc(const Model& model, const Dataset& data, const MfOptions& options = {},
              int threads = 1);

/// Fraction of hidden variables whose argmax-q0 value differs from the truth;
/// argmax ties resolve toward the lower value index.
double error_rate(const Model& model, const Dataset& data, const MfOptions& options = {},
                  int threads = 1);

/// All three metrics from one inference pass.
EvalReport evaluate(const Model& model, const Dataset& data, const MfOptions& options = {},
                    int threads = 1);

struct HistogramBin {
  double lo = 0.0;
  double hi = 0.0;
  std::uint64_t count = 0;
};

/// Half-open bins [lo + k*w, lo + (k+1)*w) covering [lo, hi); out-of-range
/// values are clamped into the end bins, so counts always sum to the input
/// size.
std::vector<HistogramBin> histogram(std::span<const double> values, double bin_width, double lo,
                                    double hi);

}  // namespace crflearn
