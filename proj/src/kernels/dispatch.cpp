#include <atomic>
#include <cstdlib>
#include <cstring>

#include "tierprobe/kernels.hpp"

namespace tierprobe::kernels {

namespace {

struct Table {
  double (*dot)(const double*, const double*, std::size_t) noexcept;
  double (*sum_squares)(const double*, std::size_t) noexcept;
  void (*axpy)(double, const double*, double*, std::size_t) noexcept;
  void (*scale)(double, double*, std::size_t) noexcept;
};

constexpr Table kScalar{scalar::dot, scalar::sum_squares, scalar::axpy, scalar::scale};
constexpr Table kAvx2{avx2::dot, avx2::sum_squares, avx2::axpy, avx2::scale};

bool cpu_has_avx2() noexcept {
#if defined(__x86_64__) || defined(__i386__)
  return avx2::compiled() && __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
  return false;
#endif
}

Backend initial_backend() noexcept {
  if (const char* env = std::getenv("TIERPROBE_SIMD"); env && std::strcmp(env, "scalar") == 0) {
    return Backend::Scalar;
  }
  return cpu_has_avx2() ? Backend::Avx2 : Backend::Scalar;
}

std::atomic<Backend>& current() noexcept {
  static std::atomic<Backend> backend{initial_backend()};
  return backend;
}

const Table& table() noexcept {
  return current().load(std::memory_order_relaxed) == Backend::Avx2 ? kAvx2 : kScalar;
}

}  // namespace

std::string_view backend_name(Backend b) noexcept {
  return b == Backend::Avx2 ? "avx2" : "scalar";
}

Backend active_backend() noexcept { return current().load(std::memory_order_relaxed); }

bool backend_available(Backend b) noexcept { return b == Backend::Scalar || cpu_has_avx2(); }

bool set_backend(Backend b) noexcept {
  if (!backend_available(b)) return false;
  current().store(b, std::memory_order_relaxed);
  return true;
}

double dot(std::span<const double> a, std::span<const double> b) noexcept {
  return table().dot(a.data(), b.data(), a.size());
}

double sum_squares(std::span<const double> a) noexcept {
  return table().sum_squares(a.data(), a.size());
}

void axpy(double alpha, std::span<const double> x, std::span<double> y) noexcept {
  table().axpy(alpha, x.data(), y.data(), x.size());
}

void scale(double alpha, std::span<double> x) noexcept { table().scale(alpha, x.data(), x.size()); }

void gemv(const Matrix& a, std::span<const double> x, std::span<double> y) noexcept {
  const Table& t = table();
  for (std::size_t r = 0; r < a.rows(); ++r) y[r] = t.dot(a.row(r).data(), x.data(), a.cols());
}

void gemv_t_acc(const Matrix& a, std::span<const double> x, std::span<double> y) noexcept {
  const Table& t = table();
  for (std::size_t r = 0; r < a.rows(); ++r) {
    if (x[r] != 0.0) t.axpy(x[r], a.row(r).data(), y.data(), a.cols());
  }
}

}  // namespace tierprobe::kernels
