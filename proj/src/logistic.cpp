#include <algorithm>
#include <cmath>
#include <deque>

#include "tierprobe/error.hpp"
#include "tierprobe/kernels.hpp"
#include "tierprobe/probes.hpp"

namespace tierprobe {

namespace {

constexpr std::size_t K = kTierCount;

// Parameter vector layout: K*d weights (row-major), then K intercepts.
LogisticModel unpack(std::span<const double> theta, std::size_t d) {
  LogisticModel m;
  m.weights = Matrix(K, d, std::vector<double>(theta.begin(), theta.begin() + K * d));
  m.intercepts.assign(theta.begin() + K * d, theta.end());
  return m;
}

// Logits for one row into `z`.
void logits(const LogisticModel& m, std::span<const double> x, std::span<double> z) {
  for (std::size_t k = 0; k < K; ++k) z[k] = kernels::dot(m.weights.row(k), x) + m.intercepts[k];
}

// Stable softmax in place; returns log-sum-exp of the input.
double softmax_inplace(std::span<double> z) {
  const double zmax = *std::max_element(z.begin(), z.end());
  double total = 0.0;
  for (double& v : z) {
    v = std::exp(v - zmax);
    total += v;
  }
  for (double& v : z) v /= total;
  return zmax + std::log(total);
}

double norm2(std::span<const double> v) { return std::sqrt(kernels::sum_squares(v)); }

void check_inputs(const Matrix& x, std::span<const int> tiers) {
  if (x.rows() == 0) throw ValidationError("logistic: need at least one training example");
  if (x.rows() != tiers.size()) {
    throw ValidationError("logistic: dimension mismatch (" + std::to_string(x.rows()) + " rows, " +
                          std::to_string(tiers.size()) + " labels)");
  }
  for (int t : tiers) {
    if (t < 0 || t >= static_cast<int>(K)) {
      throw ValidationError("logistic: tier ordinal out of range: " + std::to_string(t));
    }
  }
  for (double v : x.flat()) {
    if (!std::isfinite(v)) throw ValidationError("logistic: non-finite value in design matrix");
  }
}

}  // namespace

LogisticModel zero_logistic(std::size_t dim) {
  LogisticModel m;
  m.weights = Matrix(K, dim);
  m.intercepts.assign(K, 0.0);
  return m;
}

double logistic_objective(const LogisticModel& m, const Matrix& x, std::span<const int> tiers,
                          double reg, Vector* gradient) {
  const std::size_t n = x.rows();
  const std::size_t d = x.cols();
  const double inv_n = 1.0 / static_cast<double>(n);
  if (gradient) gradient->assign(K * d + K, 0.0);

  Matrix grad_w;
  if (gradient) grad_w = Matrix(K, d);
  std::array<double, K> z{};
  double loss = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const auto xi = x.row(i);
    logits(m, xi, z);
    const double true_logit = z[static_cast<std::size_t>(tiers[i])];
    loss += softmax_inplace(z) - true_logit;
    if (gradient) {
      z[static_cast<std::size_t>(tiers[i])] -= 1.0;
      for (std::size_t k = 0; k < K; ++k) {
        kernels::axpy(z[k], xi, grad_w.row(k));
        (*gradient)[K * d + k] += z[k];
      }
    }
  }
  loss *= inv_n;
  const double penalty = kernels::sum_squares(m.weights.flat());
  if (gradient) {
    for (std::size_t j = 0; j < K * d; ++j) {
      (*gradient)[j] = grad_w.flat()[j] * inv_n + reg * m.weights.flat()[j];
    }
    for (std::size_t k = 0; k < K; ++k) (*gradient)[K * d + k] *= inv_n;
  }
  return loss + 0.5 * reg * penalty;
}

LogisticModel fit_logistic(const Matrix& x_train, std::span<const int> tiers_train,
                           const LogisticConfig& cfg) {
  check_inputs(x_train, tiers_train);
  if (!(cfg.reg >= 0.0)) throw ValidationError("logistic: regularization must be >= 0");
  const std::size_t d = x_train.cols();
  const std::size_t p = K * d + K;

  auto evaluate = [&](const Vector& theta, Vector& grad) {
    return logistic_objective(unpack(theta, d), x_train, tiers_train, cfg.reg, &grad);
  };

  Vector theta(p, 0.0);
  Vector grad;
  double f = evaluate(theta, grad);
  double gnorm = norm2(grad);

  // L-BFGS with backtracking (Armijo) line search. Deterministic: no seeds,
  // zero start, fixed step schedule.
  struct Pair {
    Vector s, y;
    double rho;
  };
  std::deque<Pair> memory;
  Vector direction(p), trial(p), trial_grad;
  std::vector<double> alphas;
  int iter = 0;
  for (; iter < cfg.max_iterations && gnorm > cfg.grad_tol; ++iter) {
    // Two-loop recursion: direction = -H grad.
    direction = grad;
    alphas.assign(memory.size(), 0.0);
    for (std::size_t j = memory.size(); j-- > 0;) {
      alphas[j] = memory[j].rho * kernels::dot(memory[j].s, direction);
      kernels::axpy(-alphas[j], memory[j].y, direction);
    }
    if (!memory.empty()) {
      const Pair& last = memory.back();
      kernels::scale(kernels::dot(last.s, last.y) / kernels::sum_squares(last.y), direction);
    } else {
      kernels::scale(1.0 / std::max(gnorm, 1.0), direction);
    }
    for (std::size_t j = 0; j < memory.size(); ++j) {
      const double beta = memory[j].rho * kernels::dot(memory[j].y, direction);
      kernels::axpy(alphas[j] - beta, memory[j].s, direction);
    }
    kernels::scale(-1.0, direction);

    double slope = kernels::dot(grad, direction);
    if (!(slope < 0.0)) {
      // Not a descent direction; restart from steepest descent.
      memory.clear();
      direction = grad;
      kernels::scale(-1.0 / std::max(gnorm, 1.0), direction);
      slope = kernels::dot(grad, direction);
    }

    double step = 1.0;
    double f_trial = 0.0;
    bool accepted = false;
    for (int ls = 0; ls < 60; ++ls) {
      trial = theta;
      kernels::axpy(step, direction, trial);
      f_trial = evaluate(trial, trial_grad);
      if (std::isfinite(f_trial) && f_trial <= f + 1e-4 * step * slope) {
        accepted = true;
        break;
      }
      step *= 0.5;
    }
    if (!accepted) {
      if (memory.empty()) break;  // steepest descent cannot make progress: rounding floor
      memory.clear();
      continue;
    }

    Pair pair{Vector(p), Vector(p), 0.0};
    for (std::size_t j = 0; j < p; ++j) {
      pair.s[j] = trial[j] - theta[j];
      pair.y[j] = trial_grad[j] - grad[j];
    }
    const double sy = kernels::dot(pair.s, pair.y);
    theta.swap(trial);
    grad.swap(trial_grad);
    f = f_trial;
    gnorm = norm2(grad);
    if (sy > 1e-16 * norm2(pair.s) * norm2(pair.y)) {
      pair.rho = 1.0 / sy;
      memory.push_back(std::move(pair));
      if (memory.size() > static_cast<std::size_t>(std::max(cfg.history, 1))) memory.pop_front();
    }
  }

  LogisticModel m = unpack(theta, d);
  m.reg = cfg.reg;
  m.iterations = iter;
  m.grad_norm = gnorm;
  m.converged = gnorm <= cfg.grad_tol;
  m.objective = f;
  for (double v : theta) {
    if (!std::isfinite(v)) throw ComputationError("logistic: parameters became non-finite");
  }
  return m;
}

std::size_t argmax_lowest(std::span<const double> values) noexcept {
  std::size_t best = 0;
  for (std::size_t k = 1; k < values.size(); ++k) {
    if (values[k] > values[best]) best = k;
  }
  return best;
}

TierPrediction predict_tier(const LogisticModel& m, const Matrix& x) {
  if (x.cols() != m.dim()) {
    throw ValidationError("logistic predict: dimension mismatch (model d=" +
                          std::to_string(m.dim()) + ", input d=" + std::to_string(x.cols()) + ")");
  }
  TierPrediction out{Matrix(x.rows(), K), std::vector<int>(x.rows())};
  for (std::size_t i = 0; i < x.rows(); ++i) {
    auto probs = out.probabilities.row(i);
    logits(m, x.row(i), probs);
    // Argmax on logits, not probabilities: exp() can merge nearby logits into
    // equal probabilities and shift the tie-break.
    out.tiers[i] = static_cast<int>(argmax_lowest(probs));
    softmax_inplace(probs);
  }
  return out;
}

}  // namespace tierprobe
