#include "crflearn/evalx.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <stdexcept>

#include "crflearn/parallel.hpp"
#include "crflearn/rng.hpp"

namespace crflearn {

std::vector<CvSplit> make_splits(const Dataset& data, int folds, double fraction,
                                 std::uint64_t seed) {
  (void)fraction;  // each fold hides exactly 1/folds of the slots
  if (folds < 2) throw std::invalid_argument("folds must be >= 2");
  const int n = data.schema().variable_count();
  const std::size_t slots = data.size() * static_cast<std::size_t>(n);

  std::vector<std::uint64_t> order(slots);
  for (std::size_t i = 0; i < slots; ++i) order[i] = i;
  Rng rng(seed);
  for (std::size_t i = slots; i > 1; --i) {  // Fisher-Yates
    const std::size_t j = rng.next_below(i);
    std::swap(order[i - 1], order[j]);
  }

  std::vector<CvSplit> splits(folds);
  for (int f = 0; f < folds; ++f) {
    splits[f].fold = f;
    splits[f].hidden.assign(data.size(), std::vector<std::uint8_t>(n, 0));
  }
  const std::size_t base = slots / folds;
  const std::size_t extra = slots % folds;
  std::size_t cursor = 0;
  for (int f = 0; f < folds; ++f) {
    const std::size_t take = base + (static_cast<std::size_t>(f) < extra ? 1 : 0);
    for (std::size_t t = 0; t < take; ++t) {
      const std::uint64_t slot = order[cursor++];
      splits[f].hidden[slot / n][slot % n] = 1;
    }
  }
  return splits;
}

Dataset apply_split(const Dataset& data, const CvSplit& split) {
  std::vector<Instance> instances = data.instances();
  for (std::size_t i = 0; i < instances.size(); ++i) {
    for (int k = 0; k < data.schema().variable_count(); ++k) {
      if (split.hides(i, k)) instances[i].hidden[k] = 1;
    }
  }
  return Dataset(data.schema(), std::move(instances));
}

namespace {

std::vector<Marginals> infer_all(const Model& model, const Dataset& data,
                                 const MfOptions& options, int threads) {
  std::vector<Marginals> beliefs(data.size());
  parallel_blocks(data.size(), threads, [&](std::size_t lo, std::size_t hi, std::size_t) {
    for (std::size_t i = lo; i < hi; ++i) {
      beliefs[i] = mf_converge(model, data.instance(i), options).beliefs;
    }
  });
  return beliefs;
}

double cll_from(const Dataset& data, const std::vector<Marginals>& beliefs) {
  double sum = 0.0;
  std::int64_t slots = 0;
  for (std::size_t i = 0; i < data.size(); ++i) {
    const Instance& inst = data.instance(i);
    for (int k = 0; k < data.schema().variable_count(); ++k) {
      if (!inst.is_hidden(k)) continue;
      sum += std::log(std::max(beliefs[i].prob(k, inst.values[k]), 1e-12));
      ++slots;
    }
  }
  if (slots == 0) throw std::invalid_argument("no hidden slots to evaluate");
  return sum / slots;
}

double auc_from(const Dataset& data, const std::vector<Marginals>& beliefs) {
  struct Scored {
    double score;
    std::size_t instance;
    State state;
    bool relevant;
  };
  std::vector<Scored> pool;
  std::int64_t relevant_total = 0;
  for (std::size_t i = 0; i < data.size(); ++i) {
    const Instance& inst = data.instance(i);
    for (int k = 0; k < data.schema().variable_count(); ++k) {
      if (!inst.is_hidden(k)) continue;
      for (int v = 0; v < data.schema().cardinality(k); ++v) {
        const bool relevant = (v == inst.values[k]);
        pool.push_back(Scored{beliefs[i].prob(k, v), i, State{k, v}, relevant});
        relevant_total += relevant;
      }
    }
  }
  if (relevant_total == 0) throw std::invalid_argument("no hidden slots to evaluate");
  // Descending score; ties by (instance, variable, value).
  std::sort(pool.begin(), pool.end(), [](const Scored& a, const Scored& b) {
    if (a.score != b.score) return a.score > b.score;
    if (a.instance != b.instance) return a.instance < b.instance;
    return a.state < b.state;
  });
  double area = 0.0;
  std::int64_t hits = 0;
  for (std::size_t pos = 0; pos < pool.size(); ++pos) {
    if (!pool[pos].relevant) continue;
    ++hits;
    area += static_cast<double>(hits) / static_cast<double>(pos + 1);
  }
  return area / static_cast<double>(relevant_total);
}

double error_from(const Dataset& data, const std::vector<Marginals>& beliefs) {
  std::int64_t wrong = 0, slots = 0;
  for (std::size_t i = 0; i < data.size(); ++i) {
    const Instance& inst = data.instance(i);
    for (int k = 0; k < data.schema().variable_count(); ++k) {
      if (!inst.is_hidden(k)) continue;
      const auto d = beliefs[i].dist(k);
      int best = 0;
      for (int v = 1; v < static_cast<int>(d.size()); ++v) {
        if (d[v] > d[best]) best = v;  // ties keep the lower index
      }
      wrong += (best != inst.values[k]);
      ++slots;
    }
  }
  if (slots == 0) throw std::invalid_argument("no hidden slots to evaluate");
  return static_cast<double>(wrong) / static_cast<double>(slots);
}

}  // namespace

double conditional_log_likelihood(const Model& model, const Dataset& data,
                                  const MfOptions& options, int threads) {
  return cll_from(data, infer_all(model, data, options, threads));
}

double pr_auc(const Model& model, const Dataset& data, const MfOptions& options, int threads) {
  return auc_from(data, infer_all(model, data, options, threads));
}

double error_rate(const Model& model, const Dataset& data, const MfOptions& options,
                  int threads) {
  return error_from(data, infer_all(model, data, options, threads));
}

EvalReport evaluate(const Model& model, const Dataset& data, const MfOptions& options,
                    int threads) {
  const auto start = std::chrono::steady_clock::now();
  const auto beliefs = infer_all(model, data, options, threads);
  EvalReport report;
  report.cll = cll_from(data, beliefs);
  report.auc = auc_from(data, beliefs);
  report.error_rate = error_from(data, beliefs);
  report.introduced_features = static_cast<std::int64_t>(model.feature_count());
  report.active_features = static_cast<std::int64_t>(model.active_count());
  for (const Instance& inst : data.instances()) report.hidden_slots += inst.hidden_count();
  report.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return report;
}

std::vector<HistogramBin> histogram(std::span<const double> values, double bin_width, double lo,
                                    double hi) {
  if (bin_width <= 0.0) throw std::invalid_argument("bin width must be positive");
  if (lo >= hi) throw std::invalid_argument("histogram range must be non-empty");
  const int bins = static_cast<int>(std::ceil((hi - lo) / bin_width - 1e-12));
  std::vector<HistogramBin> out(std::max(bins, 1));
  for (int b = 0; b < static_cast<int>(out.size()); ++b) {
    out[b].lo = lo + b * bin_width;
    out[b].hi = lo + (b + 1) * bin_width;
  }
  for (double v : values) {
    int b = static_cast<int>(std::floor((v - lo) / bin_width));
    b = std::clamp(b, 0, static_cast<int>(out.size()) - 1);
    ++out[b].count;
  }
  return out;
}

}  // namespace crflearn
