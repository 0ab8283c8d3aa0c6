#pragma once

#include <cstddef>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "tierprobe/matrix.hpp"

namespace tierprobe {

struct PcaModel {
  Vector mean;                     // d
  Matrix components;               // k x d, orthonormal rows
  Vector explained_variance_ratio; // k, nonincreasing

  std::size_t k() const noexcept { return components.rows(); }
  std::size_t dim() const noexcept { return components.cols(); }
};

/// Top-k principal axes of the mean-centered rows, from a singular value
/// decomposition. Each axis is signed so its largest-magnitude coordinate is
/// positive. k must be 2 or 3 and the rows must not all coincide.
PcaModel pca_fit(const Matrix& x, std::size_t k);

/// Coordinates of each row on the model's axes (n x k).
Matrix pca_transform(const PcaModel& m, const Matrix& x);

/// Mean squared distance between rows and their rank-k reconstruction.
double reconstruction_error(const PcaModel& m, const Matrix& x);

struct ProjectionTable {
  std::vector<std::string> ids;
  Matrix coords;  // n x k
  Vector energy;
};

ProjectionTable pca_project(const PcaModel& m, const Matrix& x, std::span<const std::string> ids,
                            std::span<const double> energy);

/// CSV with header id,x,y[,z],energy.
void write_projection_table(const ProjectionTable& t, std::ostream& out);

}  // namespace tierprobe
