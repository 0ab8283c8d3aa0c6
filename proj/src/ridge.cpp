#include <Eigen/Cholesky>
#include <Eigen/Core>
#include <cmath>

#include "tierprobe/error.hpp"
#include "tierprobe/kernels.hpp"
#include "tierprobe/probes.hpp"

namespace tierprobe {

namespace {

using RowMajor = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

void require_finite(std::span<const double> values, const char* what) {
  for (double v : values) {
    if (!std::isfinite(v)) throw ValidationError(std::string("non-finite value in ") + what);
  }
}

}  // namespace

struct RidgeSolver::Impl {
  double alpha = 1.0;
  Vector column_means;
  Matrix centered;  // n x d
  bool dual = false;
  Eigen::LLT<Eigen::MatrixXd> llt;
};

RidgeSolver::RidgeSolver(const Matrix& x_train, double alpha) : impl_(std::make_unique<Impl>()) {
  const std::size_t n = x_train.rows();
  const std::size_t d = x_train.cols();
  if (n < 2) throw ValidationError("ridge: need at least 2 training rows");
  if (d < 1) throw ValidationError("ridge: design matrix has no columns");
  if (!(alpha > 0.0) || !std::isfinite(alpha)) throw ValidationError("ridge: alpha must be > 0");
  require_finite(x_train.flat(), "ridge design matrix");

  Impl& s = *impl_;
  s.alpha = alpha;
  s.column_means.assign(d, 0.0);
  for (std::size_t r = 0; r < n; ++r) kernels::axpy(1.0, x_train.row(r), s.column_means);
  for (double& m : s.column_means) m /= static_cast<double>(n);
  s.centered = x_train;
  for (std::size_t r = 0; r < n; ++r) kernels::axpy(-1.0, s.column_means, s.centered.row(r));

  Eigen::Map<const RowMajor> xc(s.centered.data(), static_cast<Eigen::Index>(n),
                                static_cast<Eigen::Index>(d));
  s.dual = d > n;
  Eigen::MatrixXd system;
  if (s.dual) {
    system = xc * xc.transpose();
    system.diagonal().array() += alpha;
  } else {
    system = xc.transpose() * xc;
    system.diagonal().array() += alpha;
  }
  s.llt.compute(system);
  if (s.llt.info() != Eigen::Success) {
    throw ComputationError("ridge: Cholesky factorization failed");
  }
}

RidgeSolver::~RidgeSolver() = default;
RidgeSolver::RidgeSolver(RidgeSolver&&) noexcept = default;
RidgeSolver& RidgeSolver::operator=(RidgeSolver&&) noexcept = default;

std::size_t RidgeSolver::rows() const noexcept { return impl_->centered.rows(); }
std::size_t RidgeSolver::dim() const noexcept { return impl_->centered.cols(); }
bool RidgeSolver::uses_dual() const noexcept { return impl_->dual; }

RidgeModel RidgeSolver::solve(std::span<const double> y_train) const {
  const Impl& s = *impl_;
  const std::size_t n = rows();
  const std::size_t d = dim();
  if (y_train.size() != n) {
    throw ValidationError("ridge: dimension mismatch (" + std::to_string(n) + " rows, " +
                          std::to_string(y_train.size()) + " targets)");
  }
  require_finite(y_train, "ridge targets");

  double y_mean = 0.0;
  for (double v : y_train) y_mean += v;
  y_mean /= static_cast<double>(n);
  Vector yc(y_train.begin(), y_train.end());
  for (double& v : yc) v -= y_mean;

  RidgeModel m;
  m.alpha = s.alpha;
  m.weights.assign(d, 0.0);
  if (s.dual) {
    Eigen::Map<const Eigen::VectorXd> rhs(yc.data(), static_cast<Eigen::Index>(n));
    const Eigen::VectorXd coef = s.llt.solve(rhs);
    kernels::gemv_t_acc(s.centered, std::span<const double>(coef.data(), n), m.weights);
  } else {
    Vector rhs(d, 0.0);
    kernels::gemv_t_acc(s.centered, yc, rhs);
    Eigen::Map<const Eigen::VectorXd> rhs_map(rhs.data(), static_cast<Eigen::Index>(d));
    const Eigen::VectorXd w = s.llt.solve(rhs_map);
    std::copy(w.data(), w.data() + d, m.weights.begin());
  }
  m.intercept = y_mean - kernels::dot(s.column_means, m.weights);
  return m;
}

RidgeModel fit_ridge(const Matrix& x_train, std::span<const double> y_train, double alpha) {
  if (x_train.rows() != y_train.size()) {
    throw ValidationError("ridge: dimension mismatch (" + std::to_string(x_train.rows()) +
                          " rows, " + std::to_string(y_train.size()) + " targets)");
  }
  return RidgeSolver(x_train, alpha).solve(y_train);
}

Vector predict_ridge(const RidgeModel& model, const Matrix& x) {
  if (x.cols() != model.weights.size()) {
    throw ValidationError("ridge predict: dimension mismatch (model d=" +
                          std::to_string(model.weights.size()) + ", input d=" +
                          std::to_string(x.cols()) + ")");
  }
  Vector out(x.rows());
  kernels::gemv(x, model.weights, out);
  for (double& v : out) v += model.intercept;
  return out;
}

}  // namespace tierprobe
