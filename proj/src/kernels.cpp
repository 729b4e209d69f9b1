// SPDX-License-Identifier: Apache-2.0
#include "tdsl/kernels.hpp"

#include <atomic>
#include <cstdlib>
#include <string>

#include "tdsl/error.hpp"

namespace tdsl::kernels {
namespace {

double dot_scalar(const double* a, const double* b, std::size_t n) {
  double acc = 0.0;
  for (std::size_t i = 0; i < n; ++i) acc += a[i] * b[i];
  return acc;
}

void axpy_scalar(double alpha, const double* x, double* y, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) y[i] += alpha * x[i];
}

void add_scaled_scalar(const double* x, double alpha, const double* y, double* out, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) out[i] = x[i] + alpha * y[i];
}

double sum_scalar(const double* x, std::size_t n) {
  double acc = 0.0;
  for (std::size_t i = 0; i < n; ++i) acc += x[i];
  return acc;
}

void central_moments_scalar(const double* x, std::size_t n, double mean, double* m2, double* m4) {
  double s2 = 0.0;
  double s4 = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double dev = x[i] - mean;
    const double sq = dev * dev;
    s2 += sq;
    s4 += sq * sq;
  }
  *m2 = s2;
  *m4 = s4;
}

constexpr KernelTable kScalar{Isa::Scalar,         "scalar",   dot_scalar, axpy_scalar,
                              add_scaled_scalar,   sum_scalar, central_moments_scalar};

bool cpu_has_avx2() noexcept {
#if defined(__x86_64__) || defined(__i386__)
  return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
  return false;
#endif
}

const KernelTable* initial_table() noexcept {
  if (const char* env = std::getenv("TDSL_KERNELS")) {
    const std::string_view want(env);
    if (want == "scalar") return &kScalar;
    if (want == "avx2" && available(Isa::Avx2)) return detail::avx2_table();
  }
  if (available(Isa::Avx2)) return detail::avx2_table();
  return &kScalar;
}

std::atomic<const KernelTable*>& active_slot() noexcept {
  static std::atomic<const KernelTable*> slot{initial_table()};
  return slot;
}

}  // namespace

const KernelTable& scalar_table() noexcept { return kScalar; }

bool available(Isa isa) noexcept {
  switch (isa) {
    case Isa::Scalar:
      return true;
    case Isa::Avx2:
      return detail::avx2_table() != nullptr && cpu_has_avx2();
  }
  return false;
}

const KernelTable& table(Isa isa) {
  require(available(isa), ErrorKind::Configuration, "requested kernel ISA is not available on this CPU");
  return isa == Isa::Avx2 ? *detail::avx2_table() : kScalar;
}

const KernelTable& active() noexcept { return *active_slot().load(std::memory_order_acquire); }

void select(Isa isa) { active_slot().store(&table(isa), std::memory_order_release); }

Isa parse_isa(std::string_view name) {
  if (name == "scalar") return Isa::Scalar;
  if (name == "avx2") return Isa::Avx2;
  fail(ErrorKind::InvalidInput, "unknown kernel ISA '" + std::string(name) + "'");
}

ScopedIsa::ScopedIsa(Isa isa) : previous_(active().isa) { select(isa); }
ScopedIsa::~ScopedIsa() { select(previous_); }

}  // namespace tdsl::kernels
