#include <cmath>

#include "tierprobe/error.hpp"
#include "tierprobe/kernels.hpp"
#include "tierprobe/probes.hpp"
#include "tierprobe/rng.hpp"

namespace tierprobe {

namespace {

double activate(Activation a, double z) noexcept {
  return a == Activation::Relu ? (z > 0.0 ? z : 0.0) : std::tanh(z);
}

// Derivative expressed through the activation output h = act(z).
double activate_grad(Activation a, double h) noexcept {
  return a == Activation::Relu ? (h > 0.0 ? 1.0 : 0.0) : 1.0 - h * h;
}

void check_input_dim(const MlpModel& m, const Matrix& x) {
  if (x.cols() != m.input_dim()) {
    throw ValidationError("mlp: dimension mismatch (model input " + std::to_string(m.input_dim()) +
                          ", data " + std::to_string(x.cols()) + ")");
  }
}

// Hidden activations for one sample.
struct Forward {
  Vector h1, h2;
  double out = 0.0;
};

void forward(const MlpModel& m, std::span<const double> x, Forward& f) {
  const auto& [l0, l1, l2] = m.layers;
  f.h1.resize(l0.bias.size());
  f.h2.resize(l1.bias.size());
  kernels::gemv(l0.weights, x, f.h1);
  for (std::size_t j = 0; j < f.h1.size(); ++j) f.h1[j] = activate(m.activation, f.h1[j] + l0.bias[j]);
  kernels::gemv(l1.weights, f.h1, f.h2);
  for (std::size_t j = 0; j < f.h2.size(); ++j) f.h2[j] = activate(m.activation, f.h2[j] + l1.bias[j]);
  f.out = kernels::dot(l2.weights.row(0), f.h2) + l2.bias[0];
}

}  // namespace

std::string_view activation_name(Activation a) noexcept {
  return a == Activation::Relu ? "relu" : "tanh";
}

Activation parse_activation(std::string_view name) {
  if (name == "relu") return Activation::Relu;
  if (name == "tanh") return Activation::Tanh;
  throw UsageError("unknown activation '" + std::string(name) + "' (expected relu or tanh)");
}

std::size_t MlpModel::parameter_count() const noexcept {
  std::size_t total = 0;
  for (const auto& l : layers) total += l.weights.flat().size() + l.bias.size();
  return total;
}

MlpModel init_mlp(std::size_t input_dim, std::uint64_t seed, const MlpConfig& cfg) {
  if (input_dim == 0 || cfg.hidden1 == 0 || cfg.hidden2 == 0) {
    throw ValidationError("mlp: layer sizes must be positive");
  }
  MlpModel m;
  m.activation = cfg.activation;
  m.seed = seed;
  m.config = cfg;
  const std::array<std::size_t, 4> sizes = {input_dim, cfg.hidden1, cfg.hidden2, 1};
  Rng rng(seed);
  for (std::size_t l = 0; l < 3; ++l) {
    const double bound = 1.0 / std::sqrt(static_cast<double>(sizes[l]));
    DenseLayer& layer = m.layers[l];
    layer.weights = Matrix(sizes[l + 1], sizes[l]);
    layer.bias.assign(sizes[l + 1], 0.0);
    for (double& w : layer.weights.flat()) w = rng.uniform(-bound, bound);
    for (double& b : layer.bias) b = rng.uniform(-bound, bound);
  }
  return m;
}

Vector mlp_parameters(const MlpModel& m) {
  Vector out;
  out.reserve(m.parameter_count());
  for (const auto& l : m.layers) {
    out.insert(out.end(), l.weights.flat().begin(), l.weights.flat().end());
    out.insert(out.end(), l.bias.begin(), l.bias.end());
  }
  return out;
}

void set_mlp_parameters(MlpModel& m, std::span<const double> params) {
  if (params.size() != m.parameter_count()) throw ValidationError("mlp: parameter count mismatch");
  std::size_t pos = 0;
  for (auto& l : m.layers) {
    auto w = l.weights.flat();
    std::copy(params.begin() + pos, params.begin() + pos + w.size(), w.begin());
    pos += w.size();
    std::copy(params.begin() + pos, params.begin() + pos + l.bias.size(), l.bias.begin());
    pos += l.bias.size();
  }
}

double mlp_loss(const MlpModel& m, const Matrix& x, std::span<const double> y, Vector* gradient) {
  check_input_dim(m, x);
  if (x.rows() != y.size() || x.rows() == 0) {
    throw ValidationError("mlp: dimension mismatch (" + std::to_string(x.rows()) + " rows, " +
                          std::to_string(y.size()) + " targets)");
  }
  const auto& [l0, l1, l2] = m.layers;
  const std::size_t n = x.rows();
  const double inv_n = 1.0 / static_cast<double>(n);

  // Gradient blocks, same order as mlp_parameters().
  Matrix gw0, gw1, gw2;
  Vector gb0, gb1, gb2, d1, d2;
  if (gradient) {
    gw0 = Matrix(l0.weights.rows(), l0.weights.cols());
    gw1 = Matrix(l1.weights.rows(), l1.weights.cols());
    gw2 = Matrix(1, l2.weights.cols());
    gb0.assign(l0.bias.size(), 0.0);
    gb1.assign(l1.bias.size(), 0.0);
    gb2.assign(1, 0.0);
  }

  Forward f;
  double loss = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const auto xi = x.row(i);
    forward(m, xi, f);
    const double residual = f.out - y[i];
    loss += residual * residual;
    if (!gradient) continue;

    const double d3 = 2.0 * residual * inv_n;
    kernels::axpy(d3, f.h2, gw2.row(0));
    gb2[0] += d3;

    d2.assign(f.h2.size(), 0.0);
    for (std::size_t j = 0; j < f.h2.size(); ++j) {
      d2[j] = d3 * l2.weights(0, j) * activate_grad(m.activation, f.h2[j]);
    }
    d1.assign(f.h1.size(), 0.0);
    kernels::gemv_t_acc(l1.weights, d2, d1);
    for (std::size_t j = 0; j < f.h2.size(); ++j) {
      if (d2[j] != 0.0) kernels::axpy(d2[j], f.h1, gw1.row(j));
      gb1[j] += d2[j];
    }
    for (std::size_t j = 0; j < f.h1.size(); ++j) {
      d1[j] *= activate_grad(m.activation, f.h1[j]);
      if (d1[j] != 0.0) kernels::axpy(d1[j], xi, gw0.row(j));
      gb0[j] += d1[j];
    }
  }

  if (gradient) {
    gradient->clear();
    gradient->reserve(m.parameter_count());
    auto append = [&](std::span<const double> block) {
      gradient->insert(gradient->end(), block.begin(), block.end());
    };
    append(gw0.flat());
    append(gb0);
    append(gw1.flat());
    append(gb1);
    append(gw2.flat());
    append(gb2);
  }
  return loss * inv_n;
}

MlpModel fit_mlp(const Matrix& x_train, std::span<const double> y_train, std::uint64_t seed,
                 const MlpConfig& cfg) {
  if (x_train.rows() != y_train.size() || x_train.rows() == 0) {
    throw ValidationError("mlp: dimension mismatch (" + std::to_string(x_train.rows()) +
                          " rows, " + std::to_string(y_train.size()) + " targets)");
  }
  if (cfg.epochs < 0 || !(cfg.learning_rate > 0.0)) {
    throw ValidationError("mlp: epochs must be >= 0 and learning rate > 0");
  }
  MlpModel m = init_mlp(x_train.cols(), seed, cfg);

  Vector theta = mlp_parameters(m);
  Vector first(theta.size(), 0.0), second(theta.size(), 0.0), grad;
  double beta1_pow = 1.0, beta2_pow = 1.0;
  m.loss_trace.reserve(static_cast<std::size_t>(cfg.epochs));
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    const double loss = mlp_loss(m, x_train, y_train, &grad);
    if (!std::isfinite(loss)) {
      throw ComputationError("mlp: non-finite training loss at epoch " + std::to_string(epoch));
    }
    m.loss_trace.push_back(loss);
    beta1_pow *= cfg.beta1;
    beta2_pow *= cfg.beta2;
    const double step = cfg.learning_rate * std::sqrt(1.0 - beta2_pow) / (1.0 - beta1_pow);
    for (std::size_t j = 0; j < theta.size(); ++j) {
      first[j] = cfg.beta1 * first[j] + (1.0 - cfg.beta1) * grad[j];
      second[j] = cfg.beta2 * second[j] + (1.0 - cfg.beta2) * grad[j] * grad[j];
      theta[j] -= step * first[j] / (std::sqrt(second[j]) + cfg.epsilon);
    }
    set_mlp_parameters(m, theta);
  }
  m.train_outputs = predict_mlp(m, x_train);
  for (double v : m.train_outputs) {
    if (!std::isfinite(v)) throw ComputationError("mlp: non-finite output after training");
  }
  return m;
}

Vector predict_mlp(const MlpModel& m, const Matrix& x) {
  check_input_dim(m, x);
  Vector out(x.rows());
  Forward f;
  for (std::size_t i = 0; i < x.rows(); ++i) {
    forward(m, x.row(i), f);
    out[i] = f.out;
  }
  return out;
}

}  // namespace tierprobe
