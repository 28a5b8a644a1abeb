#include "crflearn/induction.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "crflearn/parallel.hpp"

namespace crflearn {

SignalErrorTable::SignalErrorTable(const VariableSchema& schema, CandidatePolicy policy,
                                   std::span<const Marginals> q0s,
                                   std::span<const Marginals> q1s, int threads) {
  if (q0s.size() != q1s.size() || q0s.empty()) {
    throw std::invalid_argument("need aligned, non-empty q0/q1 lists");
  }
  instances_ = static_cast<int>(q0s.size());
  states_ = candidate_states(schema, policy);
  const std::size_t cells = states_.size() * static_cast<std::size_t>(instances_);
  q0_.resize(cells);
  q1_.resize(cells);
  parallel_blocks(q0s.size(), threads, [&](std::size_t lo, std::size_t hi, std::size_t) {
    for (std::size_t i = lo; i < hi; ++i) {
      for (std::size_t s = 0; s < states_.size(); ++s) {
        q0_[idx(static_cast<int>(i), static_cast<int>(s))] =
            q0s[i].prob(states_[s].variable, states_[s].value);
        q1_[idx(static_cast<int>(i), static_cast<int>(s))] =
            q1s[i].prob(states_[s].variable, states_[s].value);
      }
    }
  });
  mean0_.resize(states_.size());
  mean1_.resize(states_.size());
  for (std::size_t s = 0; s < states_.size(); ++s) {
    double m0 = 0.0, m1 = 0.0;
    for (int i = 0; i < instances_; ++i) {
      m0 += q0_[idx(i, static_cast<int>(s))];
      m1 += q1_[idx(i, static_cast<int>(s))];
    }
    mean0_[s] = m0 / instances_;
    mean1_[s] = m1 / instances_;
  }
}

SignalErrorTable build_signal_error_table(std::span<const Marginals> q0s,
                                          std::span<const Marginals> q1s,
                                          const VariableSchema& schema, CandidatePolicy policy,
                                          int threads) {
  return SignalErrorTable(schema, policy, q0s, q1s, threads);
}

PairGradientTerms decompose_pair_gradient(double q0A, double q0B, double q1A, double q1B,
                                          double E0A, double E0B) {
  const double errA = q1A - q0A;
  const double errB = q1B - q0B;
  const double sig0A = q0A - E0A;
  const double sig0B = q0B - E0B;
  // Signals under q1 against the q0 means (converged-unary regime).
  const double sig1A = q1A - E0A;
  const double sig1B = q1B - E0B;

  PairGradientTerms t;
  t.err_a_sig_b = errA * sig0B;
  t.err_b_sig_a = errB * sig0A;
  t.err_err = errA * errB;
  t.err_a_mean_b = errA * E0B;
  t.err_b_mean_a = errB * E0A;
  t.sum = t.err_a_sig_b + t.err_b_sig_a + t.err_err + t.err_a_mean_b + t.err_b_mean_a;

  t.symmetric_a = 0.5 * (sig0A + sig1A) * errB;
  t.symmetric_b = 0.5 * (sig0B + sig1B) * errA;
  t.symmetric_sum = t.symmetric_a + t.symmetric_b + t.err_a_mean_b + t.err_b_mean_a;
  return t;
}

std::uint64_t ScoreMap::pack(State a, State b) {
  if (b < a) std::swap(a, b);
  if (a.variable == b.variable) throw std::invalid_argument("pair needs distinct variables");
  return (static_cast<std::uint64_t>(static_cast<std::uint16_t>(a.variable)) << 48) |
         (static_cast<std::uint64_t>(static_cast<std::uint16_t>(a.value)) << 32) |
         (static_cast<std::uint64_t>(static_cast<std::uint16_t>(b.variable)) << 16) |
         static_cast<std::uint64_t>(static_cast<std::uint16_t>(b.value));
}

std::pair<State, State> ScoreMap::unpack(std::uint64_t key) {
  State a{static_cast<int>((key >> 48) & 0xffff), static_cast<int>((key >> 32) & 0xffff)};
  State b{static_cast<int>((key >> 16) & 0xffff), static_cast<int>(key & 0xffff)};
  return {a, b};
}

void ScoreMap::add(State a, State b, double value) { scores_[pack(a, b)] += value; }

double ScoreMap::get(State a, State b) const {
  auto it = scores_.find(pack(a, b));
  return it == scores_.end() ? 0.0 : it->second;
}

std::size_t ScoreMap::size() const {
  std::size_t n = 0;
  for (const auto& [key, v] : scores_) n += (v != 0.0);
  return n;
}

std::vector<std::pair<Feature, double>> ScoreMap::entries() const {
  std::vector<std::pair<std::uint64_t, double>> packed;
  packed.reserve(scores_.size());
  for (const auto& [key, v] : scores_) {
    if (v != 0.0) packed.emplace_back(key, v);
  }
  std::sort(packed.begin(), packed.end());
  std::vector<std::pair<Feature, double>> out;
  out.reserve(packed.size());
  for (const auto& [key, v] : packed) {
    auto [a, b] = unpack(key);
    out.emplace_back(Feature::pairwise(a, b), v);
  }
  return out;
}

ScoreMap ScoreMap::without_active(const Model& model) const {
  ScoreMap out;
  for (const auto& [key, v] : scores_) {
    auto [a, b] = unpack(key);
    if (!model.find(Feature::pairwise(a, b))) out.scores_[key] = v;
  }
  return out;
}

void ScoreMap::merge(const ScoreMap& other) {
  for (const auto& [key, v] : other.scores_) scores_[key] += v;
}

namespace {

// State-major marginal matrices over the candidate states; shared layout for
// exact scoring.
struct StateMatrix {
  std::vector<State> states;
  int instances = 0;
  std::vector<double> q0, q1;
  std::size_t idx(int i, int s) const { return static_cast<std::size_t>(s) * instances + i; }
};

StateMatrix build_state_matrix(const VariableSchema& schema, CandidatePolicy policy,
                               std::span<const Marginals> q0s, std::span<const Marginals> q1s) {
  StateMatrix m;
  m.states = candidate_states(schema, policy);
  m.instances = static_cast<int>(q0s.size());
  m.q0.resize(m.states.size() * q0s.size());
  m.q1.resize(m.states.size() * q0s.size());
  for (std::size_t s = 0; s < m.states.size(); ++s) {
    for (int i = 0; i < m.instances; ++i) {
      m.q0[m.idx(i, static_cast<int>(s))] = q0s[i].prob(m.states[s].variable, m.states[s].value);
      m.q1[m.idx(i, static_cast<int>(s))] = q1s[i].prob(m.states[s].variable, m.states[s].value);
    }
  }
  return m;
}

}  // namespace

ScoreMap grafting_scores(const Model& model, std::span<const Marginals> q0s,
                         std::span<const Marginals> q1s, ScoreStats* stats, int threads) {
  if (q0s.size() != q1s.size()) throw std::invalid_argument("q0/q1 must be aligned");
  const StateMatrix m = build_state_matrix(model.schema(), model.policy(), q0s, q1s);
  const int S = static_cast<int>(m.states.size());

  struct Part {
    ScoreMap scores;
    std::uint64_t accumulations = 0;
  };
  // Parallel over the first pair state; scores of distinct a-states never
  // collide, so the merge is only for determinism of the fold order.
  Part folded = block_mapreduce<Part>(
      static_cast<std::size_t>(S), threads, Part{},
      [&](std::size_t lo, std::size_t hi) {
        Part part;
        for (std::size_t sa = lo; sa < hi; ++sa) {
          for (int sb = static_cast<int>(sa) + 1; sb < S; ++sb) {
            if (m.states[sa].variable == m.states[sb].variable) continue;
            const Feature f = Feature::pairwise(m.states[sa], m.states[sb]);
            if (model.find(f)) continue;
            double score = 0.0;
            const double* a0 = &m.q0[m.idx(0, static_cast<int>(sa))];
            const double* b0 = &m.q0[m.idx(0, sb)];
            const double* a1 = &m.q1[m.idx(0, static_cast<int>(sa))];
            const double* b1 = &m.q1[m.idx(0, sb)];
            for (int i = 0; i < m.instances; ++i) score += a1[i] * b1[i] - a0[i] * b0[i];
            part.accumulations += static_cast<std::uint64_t>(m.instances);
            if (score != 0.0) part.scores.add(m.states[sa], m.states[sb], score);
          }
        }
        return part;
      },
      [](Part& acc, Part&& p) {
        acc.scores.merge(p.scores);
        acc.accumulations += p.accumulations;
      });
  if (stats) {
    stats->accumulations += folded.accumulations;
  }
  return folded.scores;
}

ScoreMap grafting_scores(const Model& model, std::span<const Marginals> q0s,
                         std::span<const Marginals> q1s, std::span<const Feature> candidates,
                         ScoreStats* stats) {
  if (q0s.size() != q1s.size()) throw std::invalid_argument("q0/q1 must be aligned");
  ScoreMap out;
  for (const Feature& f : candidates) {
    if (f.kind() != FeatureKind::Pairwise) {
      throw std::invalid_argument("grafting candidates must be pairwise");
    }
    if (model.find(f)) throw std::invalid_argument("grafting candidate already active");
    double score = 0.0;
    for (std::size_t i = 0; i < q0s.size(); ++i) {
      score += expect_feature(f, q1s[i]) - expect_feature(f, q0s[i]);
    }
    if (stats) stats->accumulations += q0s.size();
    if (score != 0.0) out.add(f.states()[0], f.states()[1], score);
  }
  return out;
}

ScoreMap cfi_scores(const SignalErrorTable& table, const Thresholds& thresholds,
                    ScoreStats* stats, int threads) {
  if (thresholds.t_err < 0.0 || thresholds.t_sig < 0.0) {
    throw std::invalid_argument("thresholds must be non-negative");
  }
  const int S = table.state_count();
  struct Part {
    ScoreMap scores;
    ScoreStats stats;
  };
  Part folded = block_mapreduce<Part>(
      static_cast<std::size_t>(table.instance_count()), threads, Part{},
      [&](std::size_t lo, std::size_t hi) {
        Part part;
        std::vector<int> err_set, sig_set;
        std::vector<double> err_val(S), sig_val(S);
        for (std::size_t i = lo; i < hi; ++i) {
          const int inst = static_cast<int>(i);
          err_set.clear();
          sig_set.clear();
          for (int s = 0; s < S; ++s) {
            err_val[s] = table.err(inst, s);
            sig_val[s] = table.avg_sig(inst, s);
            if (std::abs(err_val[s]) > thresholds.t_err) err_set.push_back(s);
            if (std::abs(sig_val[s]) > thresholds.t_sig) sig_set.push_back(s);
          }
          part.stats.err_states += err_set.size();
          part.stats.sig_states += sig_set.size();
          for (int a : sig_set) {
            const State sa = table.state(a);
            for (int b : err_set) {
              if (table.state(b).variable == sa.variable) continue;
              part.scores.add(sa, table.state(b), sig_val[a] * err_val[b]);
              ++part.stats.accumulations;
            }
          }
        }
        return part;
      },
      [](Part& acc, Part&& p) {
        acc.scores.merge(p.scores);
        acc.stats.accumulations += p.stats.accumulations;
        acc.stats.err_states += p.stats.err_states;
        acc.stats.sig_states += p.stats.sig_states;
      });
  if (stats) {
    stats->accumulations += folded.stats.accumulations;
    stats->err_states += folded.stats.err_states;
    stats->sig_states += folded.stats.sig_states;
  }
  return folded.scores;
}

double cfi_mean_correction(const SignalErrorTable& table, int state_a, int state_b) {
  double err_sum_a = 0.0, err_sum_b = 0.0;
  for (int i = 0; i < table.instance_count(); ++i) {
    err_sum_a += table.err(i, state_a);
    err_sum_b += table.err(i, state_b);
  }
  const double mean_a = 0.5 * (table.mean0(state_a) + table.mean1(state_a));
  const double mean_b = 0.5 * (table.mean0(state_b) + table.mean1(state_b));
  return mean_a * err_sum_b + mean_b * err_sum_a;
}

std::vector<Feature> select_top(const ScoreMap& scores, int j, double gate) {
  if (j < 1) throw std::invalid_argument("batch size must be >= 1");
  auto entries = scores.entries();  // canonical order
  std::stable_sort(entries.begin(), entries.end(), [](const auto& a, const auto& b) {
    return std::abs(a.second) > std::abs(b.second);
  });
  std::vector<Feature> out;
  for (const auto& [feature, score] : entries) {
    if (static_cast<int>(out.size()) >= j || std::abs(score) <= gate) break;
    out.push_back(feature);
  }
  return out;
}

HigherOrderGradient higher_order_gradient(std::span<const State> states, const Marginals& q0,
                                          const Marginals& q1) {
  const std::size_t k = states.size();
  if (k < 3) throw std::invalid_argument("higher-order gradient needs k >= 3 states");
  for (std::size_t i = 0; i < k; ++i) {
    for (std::size_t j = i + 1; j < k; ++j) {
      if (states[i].variable == states[j].variable) {
        throw std::invalid_argument("states must reference distinct variables");
      }
    }
  }
  HigherOrderGradient out;
  double p0 = 1.0, p1 = 1.0;
  std::vector<double> base(k), err(k);
  for (std::size_t i = 0; i < k; ++i) {
    base[i] = q0.prob(states[i].variable, states[i].value);
    err[i] = q1.prob(states[i].variable, states[i].value) - base[i];
    p0 *= base[i];
    p1 *= base[i] + err[i];
  }
  out.direct = p1 - p0;
  // Expansion of prod (q0 + err) - prod q0: sum over non-empty subsets of
  // states taking err there and q0 elsewhere.
  for (std::uint64_t mask = 1; mask < (1ull << k); ++mask) {
    double term = 1.0;
    for (std::size_t i = 0; i < k; ++i) {
      term *= (mask >> i) & 1 ? err[i] : base[i];
    }
    out.expanded += term;
  }
  return out;
}

}  // namespace crflearn
