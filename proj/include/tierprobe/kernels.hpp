#pragma once

#include <span>
#include <string_view>

#include "tierprobe/matrix.hpp"

// Data-parallel inner loops shared by the probes, normalization and the
// lexical featurizer. Each kernel has a scalar reference implementation and an
// AVX2/FMA variant; the variant is chosen once at startup from the CPU
// features and can be overridden with TIERPROBE_SIMD=scalar.
//
// The two backends agree to rounding, not bitwise. Every result inside one
// process uses the same backend, so runs stay reproducible on a given host.

namespace tierprobe::kernels {

enum class Backend { Scalar, Avx2 };

std::string_view backend_name(Backend b) noexcept;

/// Backend currently used by the free functions below.
Backend active_backend() noexcept;

/// True when the host CPU can run the backend.
bool backend_available(Backend b) noexcept;

/// Switches the active backend. Intended for tests and benchmarks; call it
/// before any concurrent work starts. Returns false if unavailable.
bool set_backend(Backend b) noexcept;

double dot(std::span<const double> a, std::span<const double> b) noexcept;
double sum_squares(std::span<const double> a) noexcept;
/// y += alpha * x
void axpy(double alpha, std::span<const double> x, std::span<double> y) noexcept;
/// x *= alpha
void scale(double alpha, std::span<double> x) noexcept;

/// y = A x
void gemv(const Matrix& a, std::span<const double> x, std::span<double> y) noexcept;
/// y += A^T x
void gemv_t_acc(const Matrix& a, std::span<const double> x, std::span<double> y) noexcept;

// Direct entry points into each backend, used by the equivalence tests.
namespace scalar {
double dot(const double* a, const double* b, std::size_t n) noexcept;
double sum_squares(const double* a, std::size_t n) noexcept;
void axpy(double alpha, const double* x, double* y, std::size_t n) noexcept;
void scale(double alpha, double* x, std::size_t n) noexcept;
}  // namespace scalar

namespace avx2 {
bool compiled() noexcept;
double dot(const double* a, const double* b, std::size_t n) noexcept;
double sum_squares(const double* a, std::size_t n) noexcept;
void axpy(double alpha, const double* x, double* y, std::size_t n) noexcept;
void scale(double alpha, double* x, std::size_t n) noexcept;
}  // namespace avx2

}  // namespace tierprobe::kernels
