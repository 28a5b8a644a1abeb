#include "crflearn/owlqn.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace crflearn {

namespace {

double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

double norm2(std::span<const double> a) { return std::sqrt(dot(a, a)); }

double sign(double x) { return x > 0.0 ? 1.0 : (x < 0.0 ? -1.0 : 0.0); }

}  // namespace

bool LbfgsMemory::push(std::vector<double> s, std::vector<double> y) {
  const double sy = dot(s, y);
  if (sy <= 1e-12) return false;
  pairs_.push_back(Pair{std::move(s), std::move(y), 1.0 / sy});
  if (static_cast<int>(pairs_.size()) > capacity_) pairs_.pop_front();
  return true;
}

void LbfgsMemory::extend(std::size_t new_dimension) {
  for (Pair& p : pairs_) {
    if (p.s.size() > new_dimension) throw std::invalid_argument("dimension cannot shrink");
    p.s.resize(new_dimension, 0.0);
    p.y.resize(new_dimension, 0.0);
  }
}

std::vector<double> LbfgsMemory::two_loop(std::span<const double> g) const {
  std::vector<double> q(g.begin(), g.end());
  if (pairs_.empty()) {
    for (double& x : q) x = -x;
    return q;
  }
  std::vector<double> alpha(pairs_.size());
  for (std::size_t i = pairs_.size(); i-- > 0;) {
    const Pair& p = pairs_[i];
    alpha[i] = p.rho * dot(p.s, q);
    for (std::size_t k = 0; k < q.size(); ++k) q[k] -= alpha[i] * p.y[k];
  }
  const Pair& last = pairs_.back();
  const double gamma = 1.0 / (last.rho * dot(last.y, last.y));
  for (double& x : q) x *= gamma;
  for (std::size_t i = 0; i < pairs_.size(); ++i) {
    const Pair& p = pairs_[i];
    const double beta = p.rho * dot(p.y, q);
    for (std::size_t k = 0; k < q.size(); ++k) q[k] += (alpha[i] - beta) * p.s[k];
  }
  for (double& x : q) x = -x;
  return q;
}

std::vector<double> pseudo_gradient(std::span<const double> theta,
                                    std::span<const double> smooth_grad, double lambda1) {
  if (theta.size() != smooth_grad.size()) throw std::invalid_argument("length mismatch");
  std::vector<double> pg(theta.size());
  for (std::size_t k = 0; k < theta.size(); ++k) {
    const double g = smooth_grad[k];
    if (theta[k] > 0.0) {
      pg[k] = g + lambda1;
    } else if (theta[k] < 0.0) {
      pg[k] = g - lambda1;
    } else if (g + lambda1 < 0.0) {
      pg[k] = g + lambda1;
    } else if (g - lambda1 > 0.0) {
      pg[k] = g - lambda1;
    } else {
      pg[k] = 0.0;
    }
  }
  return pg;
}

std::vector<double> search_direction(const LbfgsMemory& memory, std::span<const double> pgrad) {
  std::vector<double> d = memory.two_loop(pgrad);
  // Orthant alignment: keep only coordinates that agree with -pgrad.
  for (std::size_t k = 0; k < d.size(); ++k) {
    if (d[k] * pgrad[k] >= 0.0) d[k] = 0.0;
  }
  return d;
}

StepResult orthant_step(std::span<const double> theta, std::span<const double> direction,
                        std::span<const double> pgrad, const SmoothValueFn& smooth_value,
                        double lambda1, const OwlqnConfig& config, bool scale_first_step) {
  const std::size_t n = theta.size();
  StepResult result;
  result.theta.assign(theta.begin(), theta.end());
  result.orthant.resize(n);
  for (std::size_t k = 0; k < n; ++k) {
    result.orthant[k] = theta[k] != 0.0 ? sign(theta[k]) : sign(-pgrad[k]);
  }

  auto total_at = [&](std::span<const double> point) {
    double l1 = 0.0;
    for (double x : point) l1 += std::abs(x);
    return smooth_value(point) + lambda1 * l1;
  };
  const double base = total_at(theta);

  double alpha = 1.0;
  if (scale_first_step) {
    const double pn = norm2(pgrad);
    if (pn > 0.0) alpha = 1.0 / pn;
  }

  std::vector<double> candidate(n);
  for (int ls = 0; ls < config.max_line_search_steps; ++ls) {
    bool moved = false;
    for (std::size_t k = 0; k < n; ++k) {
      double v = theta[k] + alpha * direction[k];
      if (v * result.orthant[k] < 0.0) v = 0.0;  // projection: no orthant crossing
      candidate[k] = v;
      moved |= (v != theta[k]);
    }
    if (moved) {
      double dir_deriv = 0.0;
      for (std::size_t k = 0; k < n; ++k) dir_deriv += pgrad[k] * (candidate[k] - theta[k]);
      const double candidate_total = total_at(candidate);
      // strict decrease required; near the optimum the Armijo bound can round
      // to the base value itself
      if (dir_deriv < 0.0 && candidate_total <= base + config.armijo_c * dir_deriv &&
          candidate_total < base) {
        result.theta = candidate;
        result.accepted = true;
        result.alpha = alpha;
        return result;
      }
    }
    alpha *= config.backtrack;
  }
  result.stalled = true;
  return result;
}

Owlqn::Owlqn(OwlqnConfig config) : config_(config), memory_(config.memory) {}

void Owlqn::extend(std::size_t new_dimension) {
  if (config_.reset_memory_on_extend) {
    memory_.clear();
    has_previous_ = false;
    return;
  }
  memory_.extend(new_dimension);
  prev_theta_.resize(new_dimension, 0.0);
  prev_grad_.resize(new_dimension, 0.0);
}

void Owlqn::reset() {
  memory_.clear();
  has_previous_ = false;
  iterations_ = 0;
}

StepResult Owlqn::iterate(std::span<const double> theta, std::span<const double> smooth_grad,
                          const SmoothValueFn& smooth_value, double lambda1) {
  if (theta.size() != smooth_grad.size()) throw std::invalid_argument("length mismatch");
  ++iterations_;

  // Curvature pair from the previous accepted step, now that the new gradient
  // is available.
  if (has_previous_ && prev_theta_.size() == theta.size()) {
    std::vector<double> s(theta.size()), y(theta.size());
    bool any = false;
    for (std::size_t k = 0; k < theta.size(); ++k) {
      s[k] = theta[k] - prev_theta_[k];
      y[k] = smooth_grad[k] - prev_grad_[k];
      any |= (s[k] != 0.0);
    }
    if (any) memory_.push(std::move(s), std::move(y));
  }
  prev_theta_.assign(theta.begin(), theta.end());
  prev_grad_.assign(smooth_grad.begin(), smooth_grad.end());
  has_previous_ = true;

  StepResult result;
  if (lambda1 == 0.0) {
    // Plain L-BFGS with Armijo backtracking.
    double gmax = 0.0;
    for (double g : smooth_grad) gmax = std::max(gmax, std::abs(g));
    if (gmax == 0.0) {
      result.theta.assign(theta.begin(), theta.end());
      result.stationary = true;
      return result;
    }
    std::vector<double> d = memory_.two_loop(smooth_grad);
    double alpha = 1.0;
    if (memory_.empty()) {
      const double gn = norm2(smooth_grad);
      if (gn > 0.0) alpha = 1.0 / gn;
    }
    const double base = smooth_value(theta);
    const double dir_deriv = dot(smooth_grad, d);
    std::vector<double> candidate(theta.size());
    result.theta.assign(theta.begin(), theta.end());
    for (int ls = 0; ls < config_.max_line_search_steps; ++ls) {
      for (std::size_t k = 0; k < theta.size(); ++k) candidate[k] = theta[k] + alpha * d[k];
      const double candidate_value = smooth_value(candidate);
      if (dir_deriv < 0.0 &&
          candidate_value <= base + config_.armijo_c * alpha * dir_deriv &&
          candidate_value < base) {
        result.theta = candidate;
        result.accepted = true;
        result.alpha = alpha;
        break;
      }
      alpha *= config_.backtrack;
    }
    if (!result.accepted) result.stalled = true;
    return result;
  }

  std::vector<double> pgrad = pseudo_gradient(theta, smooth_grad, lambda1);
  double pmax = 0.0;
  for (double g : pgrad) pmax = std::max(pmax, std::abs(g));
  if (pmax == 0.0) {
    result.theta.assign(theta.begin(), theta.end());
    result.stationary = true;
    return result;
  }
  std::vector<double> d = search_direction(memory_, pgrad);
  return orthant_step(theta, d, pgrad, smooth_value, lambda1, config_,
                      /*scale_first_step=*/memory_.empty());
}

}  // namespace crflearn
