// SPDX-License-Identifier: Apache-2.0
#include "tdsl/link.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "tdsl/error.hpp"

namespace tdsl {

namespace {

// exp() overflows past log(DBL_MAX).
const double kExpOverflow = std::log(std::numeric_limits<double>::max());

double checked_exp(double z) {
  if (z > kExpOverflow)
    fail(ErrorKind::Overflow, "exp link saturated at logit " + std::to_string(z));
  return std::exp(z);
}

double sigmoid(double z) {
  if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

}  // namespace

std::string_view to_string(LinkTag tag) noexcept {
  switch (tag) {
    case LinkTag::Identity: return "identity";
    case LinkTag::Sigmoid: return "sigmoid";
    case LinkTag::Exp: return "exp";
    case LinkTag::ComponentwiseSoftmaxLog: return "softmax";
  }
  return "?";
}

LinkTag parse_link_tag(std::string_view name) {
  for (auto tag : {LinkTag::Identity, LinkTag::Sigmoid, LinkTag::Exp, LinkTag::ComponentwiseSoftmaxLog}) {
    if (name == to_string(tag)) return tag;
  }
  fail(ErrorKind::InvalidInput, "unknown link '" + std::string(name) + "'");
}

LinkFunction::LinkFunction(LinkTag tag, double smoothing_eps) : tag_(tag), eps_(smoothing_eps) {
  require(smoothing_eps > 0.0 && smoothing_eps <= 1e-3, ErrorKind::InvalidInput,
          "smoothing_eps must lie in (0, 1e-3]");
}

double LinkFunction::forward(double z) const {
  require(std::isfinite(z), ErrorKind::InvalidInput, "logit must be finite");
  switch (tag_) {
    case LinkTag::Identity: return z;
    case LinkTag::Sigmoid: return sigmoid(z);
    case LinkTag::Exp: return checked_exp(z);
    case LinkTag::ComponentwiseSoftmaxLog: break;
  }
  fail(ErrorKind::InvalidInput, "softmax link is vector valued; use the row overload");
}

double LinkFunction::clamp(double y) const {
  switch (tag_) {
    case LinkTag::Identity:
      return y;
    case LinkTag::Sigmoid:
      if (!(y >= 0.0 && y <= 1.0)) fail(ErrorKind::InvalidInput, "sigmoid label outside [0, 1]");
      return std::clamp(y, eps_, 1.0 - eps_);
    case LinkTag::Exp:
      if (!(y >= 0.0) || !std::isfinite(y)) fail(ErrorKind::InvalidInput, "count label must be finite and >= 0");
      return std::max(y, eps_);
    case LinkTag::ComponentwiseSoftmaxLog:
      break;
  }
  fail(ErrorKind::InvalidInput, "softmax link is vector valued; use the row overload");
}

double LinkFunction::inverse(double y) const {
  const double c = clamp(y);
  switch (tag_) {
    case LinkTag::Identity: return c;
    case LinkTag::Sigmoid: return std::log(c / (1.0 - c));
    case LinkTag::Exp: return std::log(c);
    case LinkTag::ComponentwiseSoftmaxLog: break;
  }
  fail(ErrorKind::InvalidInput, "softmax link is vector valued; use the row overload");
}

double LinkFunction::derivative(double z) const {
  switch (tag_) {
    case LinkTag::Identity: return 1.0;
    case LinkTag::Sigmoid: {
      const double s = sigmoid(z);
      return s * (1.0 - s);
    }
    case LinkTag::Exp: return checked_exp(z);
    case LinkTag::ComponentwiseSoftmaxLog: break;
  }
  fail(ErrorKind::InvalidInput, "softmax link has no scalar derivative");
}

Eigen::RowVectorXd LinkFunction::forward(const Eigen::RowVectorXd& z) const {
  if (tag_ != LinkTag::ComponentwiseSoftmaxLog) {
    Eigen::RowVectorXd out(z.size());
    for (Eigen::Index c = 0; c < z.size(); ++c) out(c) = forward(z(c));
    return out;
  }
  require(z.allFinite(), ErrorKind::InvalidInput, "logits must be finite");
  const double top = z.maxCoeff();
  Eigen::RowVectorXd e = (z.array() - top).exp().matrix();
  return e / e.sum();
}

Eigen::RowVectorXd LinkFunction::clamp(const Eigen::RowVectorXd& y) const {
  if (tag_ != LinkTag::ComponentwiseSoftmaxLog) {
    Eigen::RowVectorXd out(y.size());
    for (Eigen::Index c = 0; c < y.size(); ++c) out(c) = clamp(y(c));
    return out;
  }
  if (!((y.array() >= 0.0).all() && (y.array() <= 1.0).all()))
    fail(ErrorKind::InvalidInput, "class probabilities must lie in [0, 1]");
  Eigen::RowVectorXd c = y.array().max(eps_).min(1.0 - eps_).matrix();
  return c / c.sum();
}

Eigen::RowVectorXd LinkFunction::inverse(const Eigen::RowVectorXd& y) const {
  if (tag_ != LinkTag::ComponentwiseSoftmaxLog) {
    Eigen::RowVectorXd out(y.size());
    for (Eigen::Index c = 0; c < y.size(); ++c) out(c) = inverse(y(c));
    return out;
  }
  // Raw logs of the clamped probabilities; no centering gauge is applied.
  if (!((y.array() >= 0.0).all() && (y.array() <= 1.0).all()))
    fail(ErrorKind::InvalidInput, "class probabilities must lie in [0, 1]");
  return y.array().max(eps_).min(1.0 - eps_).log().matrix();
}

Eigen::MatrixXd LinkFunction::inverse_rows(const Eigen::MatrixXd& labels) const {
  Eigen::MatrixXd out(labels.rows(), labels.cols());
  for (Eigen::Index i = 0; i < labels.rows(); ++i) out.row(i) = inverse(Eigen::RowVectorXd(labels.row(i)));
  return out;
}

LipschitzBound lipschitz_bound(const LinkFunction& link, double domain_lo, double domain_hi, int grid_points) {
  require(!link.is_vector_valued(), ErrorKind::Configuration,
          "vector-valued links have no scalar bi-Lipschitz constant");
  require(std::isfinite(domain_lo) && std::isfinite(domain_hi) && domain_lo < domain_hi,
          ErrorKind::InvalidInput, "Lipschitz domain must be a bounded interval");
  require(grid_points >= 100, ErrorKind::InvalidInput, "Lipschitz grid needs at least 100 points");

  double L = 1.0;
  const double step = (domain_hi - domain_lo) / static_cast<double>(grid_points - 1);
  for (int k = 0; k < grid_points; ++k) {
    const double z = k + 1 == grid_points ? domain_hi : domain_lo + step * k;
    double fprime = 0.0;
    try {
      fprime = link.derivative(z);
    } catch (const Error&) {
      fail(ErrorKind::Configuration, "link derivative is unbounded on the requested domain");
    }
    const double local = std::max(fprime, 1.0 / fprime);
    if (!std::isfinite(local) || !(fprime > 0.0))
      fail(ErrorKind::Configuration, "link derivative is unbounded on the requested domain");
    L = std::max(L, local);
  }
  return {L, domain_lo, domain_hi};
}

}  // namespace tdsl
