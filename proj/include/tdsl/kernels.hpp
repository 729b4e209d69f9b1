// SPDX-License-Identifier: Apache-2.0
#pragma once

// Dense inner-loop kernels used by the TD iterations and Monte Carlo checks.
// Every kernel has a scalar reference implementation; wider variants are
// picked at runtime from the CPU feature set and must agree with the scalar
// reference to rounding (see tests/test_kernels.cpp).

#include <cstddef>
#include <span>
#include <string_view>

namespace tdsl::kernels {

enum class Isa { Scalar, Avx2 };

struct KernelTable {
  Isa isa;
  const char* name;
  // sum_i a[i] * b[i]
  double (*dot)(const double* a, const double* b, std::size_t n);
  // y[i] += alpha * x[i]
  void (*axpy)(double alpha, const double* x, double* y, std::size_t n);
  // out[i] = x[i] + alpha * y[i]
  void (*add_scaled)(const double* x, double alpha, const double* y, double* out, std::size_t n);
  // sum_i x[i]
  double (*sum)(const double* x, std::size_t n);
  // second and fourth central moment sums about `mean`
  void (*central_moments)(const double* x, std::size_t n, double mean, double* m2, double* m4);
};

const KernelTable& scalar_table() noexcept;
bool available(Isa isa) noexcept;
const KernelTable& table(Isa isa);

/// Kernels in use. Defaults to the widest supported ISA; the TDSL_KERNELS
/// environment variable ("scalar" or "avx2") overrides the default.
const KernelTable& active() noexcept;
void select(Isa isa);
Isa parse_isa(std::string_view name);

// Convenience wrappers over active().
inline double dot(std::span<const double> a, std::span<const double> b) {
  return active().dot(a.data(), b.data(), a.size());
}
inline void axpy(double alpha, std::span<const double> x, std::span<double> y) {
  active().axpy(alpha, x.data(), y.data(), x.size());
}

/// RAII override of the active kernel table, for tests and benchmarks.
class ScopedIsa {
 public:
  explicit ScopedIsa(Isa isa);
  ~ScopedIsa();
  ScopedIsa(const ScopedIsa&) = delete;
  ScopedIsa& operator=(const ScopedIsa&) = delete;

 private:
  Isa previous_;
};

namespace detail {
const KernelTable* avx2_table() noexcept;  // nullptr when not compiled in
}

}  // namespace tdsl::kernels
