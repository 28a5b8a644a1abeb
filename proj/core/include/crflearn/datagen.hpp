#pragma once

#include <cstdint>
#include <vector>

#include "crflearn/model.hpp"

namespace crflearn {

/// Ground-truth network recipe: binary variables, random edge structure with
/// mean degree K, edge weights uniform in [weight_lo, weight_hi], samples by
/// Gibbs sweeps.
struct SyntheticSpec {
  int nodes = 200;
  double degree = 5.0;        // K: expected neighbors per node
  double weight_lo = -5.0;
  double weight_hi = 5.0;
  int samples = 200;          // M
  int burn_in = 10000;        // full sweeps before the first sample
  int thinning = 1000;        // full sweeps between samples
  std::uint64_t seed = 0;

  void validate() const;
};

struct Edge {
  int a = 0;
  int b = 0;
  double weight = 0.0;
};

struct SyntheticSample {
  Model truth;               // unary features at 0 plus one (1,1) feature per edge
  std::vector<Edge> edges;   // ascending (a, b)
};

/// Samples the edge set: each of the N(N-1)/2 edges is included independently
/// with probability K/(N-1); included edges get one pairwise feature on the
/// (1,1) value pair with a uniform weight. Unary features enter with weight 0.
SyntheticSample sample_structure(const SyntheticSpec& spec);

struct GibbsStats {
  std::uint64_t sweeps = 0;  // total full sweeps run
};

/// Gibbs chain over the truth model: uniform random start, one "iteration" is
/// one full ascending resampling sweep from the exact single-site
/// conditionals; records a sample after burn_in sweeps and every thinning
/// sweeps thereafter until `samples` instances exist. Hidden masks are all
/// false.
Dataset gibbs_chain(const Model& truth, const SyntheticSpec& spec, GibbsStats* stats = nullptr);

}  // namespace crflearn
