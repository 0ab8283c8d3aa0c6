#include "tierprobe/projection.hpp"

#include <Eigen/Core>
#include <Eigen/SVD>
#include <cmath>
#include <ostream>

#include "tierprobe/error.hpp"
#include "tierprobe/format.hpp"
#include "tierprobe/kernels.hpp"

namespace tierprobe {

namespace {

using RowMajor = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + '"';
}

}  // namespace

PcaModel pca_fit(const Matrix& x, std::size_t k) {
  if (k != 2 && k != 3) throw UsageError("projection dimension must be 2 or 3");
  const std::size_t n = x.rows(), d = x.cols();
  if (n <= k) throw ValidationError("pca: need more rows than components");
  if (d < k) throw ValidationError("pca: need at least k feature columns");
  for (double v : x.flat()) {
    if (!std::isfinite(v)) throw ValidationError("pca: non-finite input");
  }

  PcaModel m;
  m.mean.assign(d, 0.0);
  for (std::size_t r = 0; r < n; ++r) kernels::axpy(1.0, x.row(r), m.mean);
  for (double& v : m.mean) v /= static_cast<double>(n);
  Matrix centered = x;
  for (std::size_t r = 0; r < n; ++r) kernels::axpy(-1.0, m.mean, centered.row(r));

  Eigen::Map<const RowMajor> xc(centered.data(), static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(d));
  Eigen::BDCSVD<Eigen::MatrixXd> svd(xc, Eigen::ComputeThinV);
  const Eigen::VectorXd& sv = svd.singularValues();
  const double total = sv.squaredNorm();
  // Identical rows leave only rounding noise after centering.
  const double scale = std::sqrt(kernels::sum_squares(x.flat()));
  if (!(total > 0.0) || std::sqrt(total) <= 1e-12 * scale) {
    throw ValidationError("pca: degenerate input (all rows identical; no variance to project)");
  }

  m.components = Matrix(k, d);
  m.explained_variance_ratio.assign(k, 0.0);
  for (std::size_t c = 0; c < k; ++c) {
    const auto axis = svd.matrixV().col(static_cast<Eigen::Index>(c));
    Eigen::Index pivot = 0;
    for (Eigen::Index j = 1; j < axis.size(); ++j) {
      if (std::abs(axis(j)) > std::abs(axis(pivot))) pivot = j;
    }
    const double sign = axis(pivot) < 0.0 ? -1.0 : 1.0;
    for (std::size_t j = 0; j < d; ++j) m.components(c, j) = sign * axis(static_cast<Eigen::Index>(j));
    const double s = c < static_cast<std::size_t>(sv.size()) ? sv(static_cast<Eigen::Index>(c)) : 0.0;
    m.explained_variance_ratio[c] = s * s / total;
  }
  return m;
}

Matrix pca_transform(const PcaModel& m, const Matrix& x) {
  if (x.cols() != m.dim()) {
    throw ValidationError("pca: dimension mismatch (model d=" + std::to_string(m.dim()) +
                          ", input d=" + std::to_string(x.cols()) + ")");
  }
  Matrix out(x.rows(), m.k());
  Vector centered(m.dim());
  for (std::size_t r = 0; r < x.rows(); ++r) {
    std::copy(x.row(r).begin(), x.row(r).end(), centered.begin());
    kernels::axpy(-1.0, m.mean, centered);
    kernels::gemv(m.components, centered, out.row(r));
  }
  return out;
}

double reconstruction_error(const PcaModel& m, const Matrix& x) {
  const Matrix coords = pca_transform(m, x);
  double total = 0.0;
  Vector residual(m.dim());
  for (std::size_t r = 0; r < x.rows(); ++r) {
    std::copy(x.row(r).begin(), x.row(r).end(), residual.begin());
    kernels::axpy(-1.0, m.mean, residual);
    for (std::size_t c = 0; c < m.k(); ++c) kernels::axpy(-coords(r, c), m.components.row(c), residual);
    total += kernels::sum_squares(residual);
  }
  return total / static_cast<double>(x.rows());
}

ProjectionTable pca_project(const PcaModel& m, const Matrix& x, std::span<const std::string> ids,
                            std::span<const double> energy) {
  if (ids.size() != x.rows() || energy.size() != x.rows()) {
    throw ValidationError("projection: ids/scores must match the number of rows");
  }
  return {std::vector<std::string>(ids.begin(), ids.end()), pca_transform(m, x),
          Vector(energy.begin(), energy.end())};
}

void write_projection_table(const ProjectionTable& t, std::ostream& out) {
  static constexpr const char* kAxes[] = {"x", "y", "z"};
  out << "id";
  for (std::size_t c = 0; c < t.coords.cols(); ++c) out << ',' << kAxes[c];
  out << ",energy\n";
  for (std::size_t r = 0; r < t.ids.size(); ++r) {
    out << csv_field(t.ids[r]);
    for (double v : t.coords.row(r)) out << ',' << format_shortest(v);
    out << ',' << format_shortest(t.energy[r]) << '\n';
  }
}

}  // namespace tierprobe
