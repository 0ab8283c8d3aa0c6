#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "tierprobe/corpus.hpp"
#include "tierprobe/matrix.hpp"

namespace tierprobe {

// ---------------------------------------------------------------------------
// Ridge regression
// ---------------------------------------------------------------------------

struct RidgeModel {
  Vector weights;
  double intercept = 0.0;
  double alpha = 1.0;
};

/// Factorization of the centered ridge system for one fixed design matrix.
///
/// The intercept is unpenalized, so the problem is solved on column-centered
/// features and targets. With d <= n the primal system (Xc^T Xc + alpha I) is
/// Cholesky-factored; with d > n the dual system (Xc Xc^T + alpha I) is used
/// instead. The factorization depends only on X, so one solver can be reused
/// for many target vectors (e.g. label permutations over the same split).
class RidgeSolver {
 public:
  RidgeSolver(const Matrix& x_train, double alpha);
  ~RidgeSolver();
  RidgeSolver(RidgeSolver&&) noexcept;
  RidgeSolver& operator=(RidgeSolver&&) noexcept;

  RidgeModel solve(std::span<const double> y_train) const;

  std::size_t rows() const noexcept;
  std::size_t dim() const noexcept;
  bool uses_dual() const noexcept;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

/// Exact minimizer of ||y - Xw - b||^2 + alpha ||w||^2.
RidgeModel fit_ridge(const Matrix& x_train, std::span<const double> y_train, double alpha);

Vector predict_ridge(const RidgeModel& model, const Matrix& x);

// ---------------------------------------------------------------------------
// Multinomial logistic regression over the seven tiers
// ---------------------------------------------------------------------------

struct LogisticConfig {
  double reg = 1e-4;          // coefficient of ||W||^2 / 2; intercepts unpenalized
  double grad_tol = 1e-6;     // stop when the full gradient norm falls below this
  int max_iterations = 10000;
  int history = 10;           // L-BFGS memory
};

struct LogisticModel {
  Matrix weights;             // kTierCount x d
  Vector intercepts;          // kTierCount
  double reg = 0.0;
  int iterations = 0;
  double grad_norm = 0.0;
  bool converged = false;     // false: budget exhausted before grad_tol
  double objective = 0.0;

  std::size_t dim() const noexcept { return weights.cols(); }
};

/// Zero-parameter model; predicts the uniform distribution.
LogisticModel zero_logistic(std::size_t dim);

/// Objective: mean cross-entropy + reg/2 ||W||^2. Convex; minimized from
/// zero initialization with deterministic L-BFGS, so the fit does not depend
/// on any seed.
LogisticModel fit_logistic(const Matrix& x_train, std::span<const int> tiers_train,
                           const LogisticConfig& cfg = {});

/// Objective value and gradient (row-major W block then intercepts).
double logistic_objective(const LogisticModel& m, const Matrix& x, std::span<const int> tiers,
                          double reg, Vector* gradient);

struct TierPrediction {
  Matrix probabilities;   // N x kTierCount, rows sum to 1
  std::vector<int> tiers; // argmax; ties go to the lower ordinal
};

TierPrediction predict_tier(const LogisticModel& m, const Matrix& x);

/// Index of the largest value; earliest index wins ties.
std::size_t argmax_lowest(std::span<const double> values) noexcept;

// ---------------------------------------------------------------------------
// Two-hidden-layer MLP regressor
// ---------------------------------------------------------------------------

enum class Activation { Relu, Tanh };

std::string_view activation_name(Activation a) noexcept;
Activation parse_activation(std::string_view name);

struct MlpConfig {
  std::size_t hidden1 = 128;
  std::size_t hidden2 = 64;
  Activation activation = Activation::Relu;
  double learning_rate = 1e-3;
  int epochs = 500;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

struct DenseLayer {
  Matrix weights;  // out x in
  Vector bias;     // out
};

struct MlpModel {
  std::array<DenseLayer, 3> layers;  // d->h1, h1->h2, h2->1
  Activation activation = Activation::Relu;
  std::uint64_t seed = 0;
  MlpConfig config;
  Vector loss_trace;        // training MSE before each epoch's update
  Vector train_outputs;     // predictions on the training inputs after the final epoch

  std::size_t input_dim() const noexcept { return layers[0].weights.cols(); }
  std::size_t parameter_count() const noexcept;
};

/// Fan-in uniform initialization U(-1/sqrt(fan_in), 1/sqrt(fan_in)) drawn from
/// Rng(seed) in layer order (weights row-major, then biases).
MlpModel init_mlp(std::size_t input_dim, std::uint64_t seed, const MlpConfig& cfg);

/// Full-batch Adam on mean squared error for cfg.epochs epochs.
MlpModel fit_mlp(const Matrix& x_train, std::span<const double> y_train, std::uint64_t seed,
                 const MlpConfig& cfg = {});

Vector predict_mlp(const MlpModel& m, const Matrix& x);

/// Mean squared error of the model on (x, y); fills the backpropagated
/// gradient (flattened in parameter order) when `gradient` is non-null.
double mlp_loss(const MlpModel& m, const Matrix& x, std::span<const double> y, Vector* gradient);

Vector mlp_parameters(const MlpModel& m);
void set_mlp_parameters(MlpModel& m, std::span<const double> params);

}  // namespace tierprobe
