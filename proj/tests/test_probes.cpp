#include <cmath>

#include "doctest.h"
#include "oracles.hpp"
#include "tierprobe/error.hpp"
#include "tierprobe/probes.hpp"

using namespace tierprobe;

namespace {

double max_abs_diff(std::span<const double> a, std::span<const double> b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

Matrix column(std::initializer_list<double> v) { return Matrix(v.size(), 1, std::vector<double>(v)); }

}  // namespace

// ---- ridge ----

TEST_CASE("ridge matches gradient-descent oracle on a 20x5 problem") {
  Rng rng(2024);
  const Matrix x = oracle::random_matrix(20, 5, rng);
  const Vector y = oracle::random_vector(20, rng);
  const RidgeModel m = fit_ridge(x, y, 1.0);
  const auto gd = oracle::ridge_gradient_descent(x, y, 1.0);
  CHECK(max_abs_diff(m.weights, gd.weights) <= 1e-6);
  CHECK(std::abs(m.intercept - gd.intercept) <= 1e-6);

  // Residuals on the training inputs agree as well.
  const Vector pred = predict_ridge(m, x);
  for (std::size_t r = 0; r < 20; ++r) {
    double p = gd.intercept;
    for (std::size_t c = 0; c < 5; ++c) p += x(r, c) * gd.weights[c];
    CHECK(std::abs(pred[r] - p) <= 1e-6);
  }
}

TEST_CASE("ridge dual form (d > n) agrees with the oracle") {
  Rng rng(77);
  const Matrix x = oracle::random_matrix(8, 15, rng);
  const Vector y = oracle::random_vector(8, rng);
  RidgeSolver solver(x, 0.5);
  CHECK(solver.uses_dual());
  const RidgeModel m = solver.solve(y);
  const auto gd = oracle::ridge_gradient_descent(x, y, 0.5);
  CHECK(max_abs_diff(m.weights, gd.weights) <= 1e-6);
  CHECK(std::abs(m.intercept - gd.intercept) <= 1e-6);
}

TEST_CASE("ridge limits") {
  SUBCASE("two-point line interpolates as alpha vanishes") {
    const RidgeModel m = fit_ridge(column({0, 1}), Vector{0, 1}, 1e-10);
    CHECK(m.weights[0] == doctest::Approx(1.0).epsilon(1e-8));
    CHECK(std::abs(m.intercept) <= 1e-8);
  }
  SUBCASE("huge alpha predicts the mean") {
    Rng rng(3);
    const Matrix x = oracle::random_matrix(30, 4, rng);
    const Vector y = oracle::random_vector(30, rng);
    double mean = 0.0;
    for (double v : y) mean += v / 30.0;
    const RidgeModel m = fit_ridge(x, y, 1e12);
    for (double w : m.weights) CHECK(std::abs(w) <= 1e-9);
    for (double p : predict_ridge(m, x)) CHECK(p == doctest::Approx(mean).epsilon(1e-9));
  }
}

TEST_CASE("ridge prediction and input checks") {
  RidgeModel m{{0.0}, 2.5, 1.0};
  CHECK(predict_ridge(m, column({1, 2, 3})) == Vector{2.5, 2.5, 2.5});
  RidgeModel id{{1.0}, 0.0, 1.0};
  CHECK(predict_ridge(id, column({2})) == Vector{2.0});
  CHECK_THROWS_AS(predict_ridge(id, Matrix(1, 2)), ValidationError);
  CHECK_THROWS_AS(fit_ridge(column({1, 2}), Vector{1}, 1.0), ValidationError);
  CHECK_THROWS(fit_ridge(column({1, 2}), Vector{1, 2}, 0.0));
  CHECK_THROWS_AS(fit_ridge(column({1, NAN}), Vector{1, 2}, 1.0), ValidationError);
}

TEST_CASE("cached solver reuses one factorization across targets") {
  Rng rng(8);
  const Matrix x = oracle::random_matrix(25, 6, rng);
  RidgeSolver solver(x, 2.0);
  for (int k = 0; k < 3; ++k) {
    const Vector y = oracle::random_vector(25, rng);
    const RidgeModel a = solver.solve(y);
    const RidgeModel b = fit_ridge(x, y, 2.0);
    CHECK(max_abs_diff(a.weights, b.weights) <= 1e-12);
  }
}

// ---- logistic ----

TEST_CASE("zero logistic model predicts uniform with Shadow tie-break") {
  Rng rng(1);
  const LogisticModel m = zero_logistic(4);
  const auto p = predict_tier(m, oracle::random_matrix(5, 4, rng));
  for (std::size_t r = 0; r < 5; ++r) {
    for (std::size_t k = 0; k < kTierCount; ++k) CHECK(p.probabilities(r, k) == doctest::Approx(1.0 / 7.0));
    CHECK(p.tiers[r] == 0);
  }
}

TEST_CASE("separated singleton classes are fit exactly") {
  const Matrix x = column({-1.0, 1.0});
  const std::vector<int> t = {0, 3};
  LogisticConfig cfg;
  cfg.reg = 1e-4;
  const LogisticModel m = fit_logistic(x, t, cfg);
  CHECK(predict_tier(m, x).tiers == t);
}

TEST_CASE("duplicating every row leaves the fit unchanged") {
  Rng rng(31);
  const Matrix x = oracle::random_matrix(35, 3, rng);
  std::vector<int> t(35);
  for (std::size_t i = 0; i < 35; ++i) t[i] = static_cast<int>(i % 7);
  Matrix x2(70, 3);
  std::vector<int> t2(70);
  for (std::size_t i = 0; i < 70; ++i) {
    for (std::size_t c = 0; c < 3; ++c) x2(i, c) = x(i % 35, c);
    t2[i] = t[i % 35];
  }
  LogisticConfig cfg;
  cfg.reg = 1e-2;
  const auto a = fit_logistic(x, t, cfg);
  const auto b = fit_logistic(x2, t2, cfg);
  CHECK(a.converged);
  CHECK(b.converged);
  const Matrix probe = oracle::random_matrix(10, 3, rng);
  const auto pa = predict_tier(a, probe), pb = predict_tier(b, probe);
  CHECK(max_abs_diff(pa.probabilities.flat(), pb.probabilities.flat()) <= 1e-8);
  CHECK(pa.tiers == pb.tiers);
}

TEST_CASE("probability rows sum to one; shift invariance; softmax limit") {
  Rng rng(4);
  LogisticModel m = zero_logistic(6);
  for (double& w : m.weights.flat()) w = 3.0 * rng.normal();
  for (double& b : m.intercepts) b = rng.normal();
  const Matrix x = oracle::random_matrix(50, 6, rng);
  const auto p = predict_tier(m, x);
  for (std::size_t r = 0; r < 50; ++r) {
    double s = 0.0;
    for (std::size_t k = 0; k < kTierCount; ++k) {
      CHECK(p.probabilities(r, k) >= 0.0);
      CHECK(p.probabilities(r, k) <= 1.0);
      s += p.probabilities(r, k);
    }
    CHECK(std::abs(s - 1.0) <= 1e-9);
  }
  LogisticModel shifted = m;
  for (double& b : shifted.intercepts) b += 17.25;
  CHECK(predict_tier(shifted, x).tiers == p.tiers);

  LogisticModel spike = zero_logistic(6);
  spike.intercepts[2] = 800.0;
  const auto ps = predict_tier(spike, x);
  CHECK(ps.probabilities(0, 2) == doctest::Approx(1.0));
  CHECK(ps.tiers[0] == 2);
}

TEST_CASE("logistic gradient matches finite differences") {
  Rng rng(6);
  const Matrix x = oracle::random_matrix(12, 3, rng);
  std::vector<int> t(12);
  for (std::size_t i = 0; i < 12; ++i) t[i] = static_cast<int>(rng.uniform_below(7));
  LogisticModel m = zero_logistic(3);
  for (double& w : m.weights.flat()) w = 0.5 * rng.normal();
  for (double& b : m.intercepts) b = 0.5 * rng.normal();
  Vector grad;
  logistic_objective(m, x, t, 0.1, &grad);

  Vector params(m.weights.flat().begin(), m.weights.flat().end());
  params.insert(params.end(), m.intercepts.begin(), m.intercepts.end());
  auto f = [&](const Vector& p) {
    LogisticModel q = m;
    std::copy(p.begin(), p.begin() + 21, q.weights.flat().begin());
    std::copy(p.begin() + 21, p.end(), q.intercepts.begin());
    return logistic_objective(q, x, t, 0.1, nullptr);
  };
  CHECK(oracle::max_relative_error(grad, oracle::central_gradient(f, params, 1e-5)) < 1e-6);
}

TEST_CASE("argmax ties go to the lowest index") {
  CHECK(argmax_lowest(Vector{1, 3, 3, 2}) == 1);
  CHECK(argmax_lowest(Vector{5, 5}) == 0);
}

// ---- mlp ----

TEST_CASE("mlp gradient matches central differences on a 3x4 batch") {
  Rng rng(10);
  const Matrix x = oracle::random_matrix(3, 4, rng);
  const Vector y = oracle::random_vector(3, rng);
  for (Activation act : {Activation::Relu, Activation::Tanh}) {
    MlpConfig cfg;
    cfg.activation = act;
    cfg.hidden1 = 16;
    cfg.hidden2 = 8;
    MlpModel m = init_mlp(4, 3, cfg);
    Vector grad;
    mlp_loss(m, x, y, &grad);
    auto f = [&](const Vector& p) {
      MlpModel q = m;
      set_mlp_parameters(q, p);
      return mlp_loss(q, x, y, nullptr);
    };
    CAPTURE(activation_name(act));
    CHECK(oracle::max_relative_error(grad, oracle::central_gradient(f, mlp_parameters(m), 1e-6)) < 1e-4);
  }
}

TEST_CASE("mlp fits a constant target through its bias") {
  Rng rng(12);
  const Matrix x = oracle::random_matrix(20, 3, rng);
  const Vector y(20, 2.75);
  MlpConfig cfg;
  cfg.epochs = 3000;
  const MlpModel m = fit_mlp(x, y, 0, cfg);
  CHECK(mlp_loss(m, x, y, nullptr) <= 1e-3);
}

TEST_CASE("mlp fits XOR where the best linear model cannot") {
  const Matrix x(4, 2, {0, 0, 0, 1, 1, 0, 1, 1});
  const Vector y = {0, 1, 1, 0};
  const auto lin = oracle::least_squares(x, y);
  CHECK(oracle::mse_of(lin, x, y) == doctest::Approx(0.25).epsilon(1e-12));

  MlpConfig cfg;
  cfg.epochs = 2000;
  const MlpModel m = fit_mlp(x, y, 0, cfg);
  const double mse = mlp_loss(m, x, y, nullptr);
  CHECK(mse <= 1e-2);
  // Stored training outputs are the final forward pass.
  CHECK(predict_mlp(m, x) == m.train_outputs);
}

TEST_CASE("mlp determinism and zero-weight forward pass") {
  Rng rng(14);
  const Matrix x = oracle::random_matrix(30, 5, rng);
  const Vector y = oracle::random_vector(30, rng);
  MlpConfig cfg;
  cfg.epochs = 50;
  const MlpModel a = fit_mlp(x, y, 42, cfg);
  const MlpModel b = fit_mlp(x, y, 42, cfg);
  CHECK(mlp_parameters(a) == mlp_parameters(b));
  CHECK(predict_mlp(a, x) == predict_mlp(a, x));
  const MlpModel c = fit_mlp(x, y, 43, cfg);
  CHECK(mlp_parameters(a) != mlp_parameters(c));

  MlpModel z = init_mlp(5, 0, cfg);
  Vector zero(z.parameter_count(), 0.0);
  set_mlp_parameters(z, zero);
  z.layers[2].bias[0] = -1.25;
  for (double p : predict_mlp(z, x)) CHECK(p == -1.25);
  CHECK_THROWS_AS(predict_mlp(z, Matrix(2, 4)), ValidationError);
}

TEST_CASE("non-finite training loss aborts with the epoch") {
  const Matrix x(4, 1, {1, 2, 3, 4});
  const Vector y = {1e308, -1e308, 1e308, -1e308};
  MlpConfig cfg;
  cfg.epochs = 5;
  CHECK_THROWS_WITH_AS(fit_mlp(x, y, 0, cfg), doctest::Contains("epoch"), ComputationError);
}

TEST_CASE("activation names") {
  CHECK(parse_activation("tanh") == Activation::Tanh);
  CHECK(activation_name(Activation::Relu) == "relu");
  CHECK_THROWS_AS(parse_activation("gelu"), UsageError);
}
