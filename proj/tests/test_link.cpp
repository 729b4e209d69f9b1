// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include <cfloat>
#include <cmath>

#include "tdsl/error.hpp"
#include "tdsl/link.hpp"
#include "tdsl/rng.hpp"

using namespace tdsl;

TEST_SUITE("link") {
  TEST_CASE("forward values") {
    CHECK(LinkFunction(LinkTag::Identity).forward(3.7) == 3.7);
    CHECK(LinkFunction(LinkTag::Sigmoid).forward(0.0) == 0.5);
    CHECK(LinkFunction(LinkTag::Exp).forward(1.0) == doctest::Approx(2.718281828459045).epsilon(1e-15));
    const LinkFunction soft(LinkTag::ComponentwiseSoftmaxLog);
    const Eigen::RowVectorXd p = soft.forward(Eigen::RowVector3d(1.0, 2.0, 3.0));
    CHECK(p.sum() == doctest::Approx(1.0));
    CHECK(p(2) / p(1) == doctest::Approx(std::exp(1.0)));
    // Max-subtraction keeps huge logits finite.
    CHECK(soft.forward(Eigen::RowVector2d(1000.0, 1000.0))(0) == doctest::Approx(0.5));
    CHECK_THROWS(soft.forward(0.3));
  }

  TEST_CASE("exp overflow is reported") {
    const LinkFunction e(LinkTag::Exp);
    CHECK(std::isfinite(e.forward(700.0)));
    try {
      e.forward(710.0);
      FAIL("expected overflow");
    } catch (const Error& err) {
      CHECK(err.kind() == ErrorKind::Overflow);
      CHECK(err.is_numeric());
    }
  }

  TEST_CASE("inverse values with clamping") {
    const LinkFunction s(LinkTag::Sigmoid);
    CHECK(s.inverse(0.5) == 0.0);
    CHECK(s.inverse(1.0) == doctest::Approx(std::log((1.0 - 1e-6) / 1e-6)).epsilon(1e-9));
    CHECK(s.inverse(1.0) == doctest::Approx(13.8155).epsilon(1e-5));
    CHECK(s.inverse(0.0) == doctest::Approx(-13.8155).epsilon(1e-5));
    const LinkFunction e(LinkTag::Exp);
    CHECK(e.inverse(0.0) == doctest::Approx(std::log(1e-6)).epsilon(1e-12));
    CHECK_THROWS_AS(e.inverse(-1.0), Error);
    CHECK_THROWS_AS(s.inverse(1.5), Error);
    CHECK_THROWS_AS(s.inverse(-0.2), Error);
    CHECK_THROWS_AS(LinkFunction(LinkTag::Sigmoid, 0.0), Error);
    CHECK_THROWS_AS(LinkFunction(LinkTag::Sigmoid, 1e-2), Error);
    CHECK_NOTHROW(LinkFunction(LinkTag::Sigmoid, 1e-3));
  }

  TEST_CASE("round trip forward(inverse(y)) == clamp(y)") {
    Rng rng(3);
    for (auto tag : {LinkTag::Identity, LinkTag::Sigmoid, LinkTag::Exp}) {
      const LinkFunction f(tag);
      for (int i = 0; i < 1000; ++i) {
        double y = 0.0;
        switch (tag) {
          case LinkTag::Identity: y = 20.0 * rng.normal(); break;
          case LinkTag::Sigmoid: y = i % 50 == 0 ? static_cast<double>(i % 100 == 0) : rng.uniform(); break;
          default: y = i % 50 == 0 ? 0.0 : 50.0 * rng.uniform(); break;
        }
        CHECK(std::abs(f.forward(f.inverse(y)) - f.clamp(y)) <= 1e-10 * std::max(1.0, std::abs(y)));
      }
    }
    const LinkFunction soft(LinkTag::ComponentwiseSoftmaxLog);
    for (int i = 0; i < 200; ++i) {
      Eigen::RowVectorXd y(4);
      for (int c = 0; c < 4; ++c) y(c) = rng.uniform();
      if (i % 10 == 0) y << 0, 1, 0, 0;
      y /= y.sum();
      CHECK((soft.forward(soft.inverse(y)) - soft.clamp(y)).cwiseAbs().maxCoeff() <= 1e-10);
      CHECK(soft.clamp(y).sum() == doctest::Approx(1.0));
    }
  }

  TEST_CASE("links are strictly increasing") {
    Rng rng(9);
    for (auto tag : {LinkTag::Identity, LinkTag::Sigmoid, LinkTag::Exp}) {
      const LinkFunction f(tag);
      for (int i = 0; i < 500; ++i) {
        const double a = 8.0 * rng.normal(), b = a + 1e-3 + rng.uniform();
        CHECK(f.forward(a) < f.forward(b));
        CHECK(f.derivative(a) > 0.0);
      }
    }
  }

  TEST_CASE("lipschitz bounds") {
    CHECK(lipschitz_bound(LinkFunction(LinkTag::Identity), -50, 50).L == 1.0);
    // 1 / (sigma(2)(1 - sigma(2))) = 2 + e^2 + e^-2.
    const double sig = 2.0 + std::exp(2.0) + std::exp(-2.0);
    CHECK(sig == doctest::Approx(9.524).epsilon(1e-4));
    CHECK(lipschitz_bound(LinkFunction(LinkTag::Sigmoid), -2, 2).L == doctest::Approx(sig).epsilon(1e-12));
    CHECK(lipschitz_bound(LinkFunction(LinkTag::Exp), -1, 1).L == doctest::Approx(std::exp(1.0)).epsilon(1e-12));
    CHECK(lipschitz_bound(LinkFunction(LinkTag::Exp), 0.1, 0.2).L >= 1.0);
    CHECK_THROWS_AS(lipschitz_bound(LinkFunction(LinkTag::ComponentwiseSoftmaxLog), -1, 1), Error);
    CHECK_THROWS_AS(lipschitz_bound(LinkFunction(LinkTag::Exp), -1000, 1000), Error);
    CHECK_THROWS_AS(lipschitz_bound(LinkFunction(LinkTag::Sigmoid), 1, -1), Error);
  }

  TEST_CASE("bi-Lipschitz sandwich holds inside the domain") {
    Rng rng(4);
    for (auto tag : {LinkTag::Sigmoid, LinkTag::Exp}) {
      const LinkFunction f(tag);
      const double L = lipschitz_bound(f, -3, 3).L;
      for (int i = 0; i < 1000; ++i) {
        const double a = -3 + 6 * rng.uniform(), b = -3 + 6 * rng.uniform();
        const double gap = std::abs(f.forward(a) - f.forward(b));
        CHECK(gap <= L * std::abs(a - b) * (1 + 1e-9));
        CHECK(gap >= std::abs(a - b) / L * (1 - 1e-9));
      }
    }
  }

  TEST_CASE("tag parsing") {
    for (auto tag : {LinkTag::Identity, LinkTag::Sigmoid, LinkTag::Exp, LinkTag::ComponentwiseSoftmaxLog})
      CHECK(parse_link_tag(to_string(tag)) == tag);
    CHECK_THROWS(parse_link_tag("probit"));
  }
}
