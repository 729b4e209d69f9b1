// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include <cmath>
#include <limits>
#include <vector>

#include "tdsl/kernels.hpp"
#include "tdsl/rng.hpp"

using namespace tdsl;
namespace k = tdsl::kernels;

namespace {

constexpr double kEps = std::numeric_limits<double>::epsilon();

std::vector<double> draw(std::size_t n, Rng& rng) {
  std::vector<double> v(n);
  for (auto& x : v) x = rng.normal() * (1.0 + 10.0 * rng.uniform());
  return v;
}

}  // namespace

TEST_SUITE("kernels") {
  TEST_CASE("scalar table is always available and named") {
    CHECK(k::available(k::Isa::Scalar));
    CHECK(std::string(k::scalar_table().name) == "scalar");
    CHECK(k::parse_isa("scalar") == k::Isa::Scalar);
    CHECK(k::parse_isa("avx2") == k::Isa::Avx2);
    CHECK_THROWS(k::parse_isa("neon"));
  }

  TEST_CASE("scoped override restores the previous selection") {
    const k::Isa before = k::active().isa;
    {
      k::ScopedIsa scope(k::Isa::Scalar);
      CHECK(k::active().isa == k::Isa::Scalar);
    }
    CHECK(k::active().isa == before);
  }

  TEST_CASE("avx2 kernels agree with the scalar reference for every tail length") {
    if (!k::available(k::Isa::Avx2)) {
      MESSAGE("avx2 not available on this CPU; equivalence not exercised");
      return;
    }
    const k::KernelTable& s = k::scalar_table();
    const k::KernelTable& v = k::table(k::Isa::Avx2);
    Rng rng(42);
    for (std::size_t n = 0; n <= 67; ++n) {
      CAPTURE(n);
      const auto a = draw(n, rng);
      const auto b = draw(n, rng);
      double mag = 0.0, abs_sum = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        mag += std::abs(a[i] * b[i]);
        abs_sum += std::abs(a[i]);
      }
      const double nn = static_cast<double>(n) + 1.0;
      CHECK(std::abs(s.dot(a.data(), b.data(), n) - v.dot(a.data(), b.data(), n)) <= 2.0 * nn * kEps * mag);
      CHECK(std::abs(s.sum(a.data(), n) - v.sum(a.data(), n)) <= 2.0 * nn * kEps * abs_sum);

      auto ys = b, yv = b;
      s.axpy(0.37, a.data(), ys.data(), n);
      v.axpy(0.37, a.data(), yv.data(), n);
      std::vector<double> os(n), ov(n);
      s.add_scaled(a.data(), -1.3, b.data(), os.data(), n);
      v.add_scaled(a.data(), -1.3, b.data(), ov.data(), n);
      for (std::size_t i = 0; i < n; ++i) {
        CHECK(std::abs(ys[i] - yv[i]) <= 2.0 * kEps * (std::abs(0.37 * a[i]) + std::abs(b[i])));
        CHECK(std::abs(os[i] - ov[i]) <= 2.0 * kEps * (std::abs(a[i]) + std::abs(1.3 * b[i])));
      }

      double m2s = 0, m4s = 0, m2v = 0, m4v = 0;
      s.central_moments(a.data(), n, 0.25, &m2s, &m4s);
      v.central_moments(a.data(), n, 0.25, &m2v, &m4v);
      CHECK(std::abs(m2s - m2v) <= 4.0 * nn * kEps * m2s);
      CHECK(std::abs(m4s - m4v) <= 4.0 * nn * kEps * m4s);
    }
  }

  TEST_CASE("scalar kernels match direct loops exactly") {
    const std::vector<double> a{1, 2, 3, 4, 5}, b{5, 4, 3, 2, 1};
    CHECK(k::scalar_table().dot(a.data(), b.data(), 5) == 35.0);
    CHECK(k::scalar_table().sum(a.data(), 5) == 15.0);
    double m2 = 0, m4 = 0;
    k::scalar_table().central_moments(a.data(), 5, 3.0, &m2, &m4);
    CHECK(m2 == 10.0);
    CHECK(m4 == 34.0);
  }
}
