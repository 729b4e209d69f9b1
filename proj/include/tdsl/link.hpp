// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <Eigen/Dense>
#include <string_view>

namespace tdsl {

enum class LinkTag { Identity, Sigmoid, Exp, ComponentwiseSoftmaxLog };

std::string_view to_string(LinkTag tag) noexcept;
LinkTag parse_link_tag(std::string_view name);

/// Inverse link f (logit -> label) together with its inverse f^-1.
///
/// Labels at the edge of the label space (0 or 1 for probabilities, 0 for
/// counts) have infinite logits; inverse() first clamps them by
/// `smoothing_eps`.
class LinkFunction {
 public:
  static constexpr double kDefaultEps = 1e-6;

  explicit LinkFunction(LinkTag tag = LinkTag::Identity, double smoothing_eps = kDefaultEps);

  LinkTag tag() const noexcept { return tag_; }
  double smoothing_eps() const noexcept { return eps_; }
  bool is_vector_valued() const noexcept { return tag_ == LinkTag::ComponentwiseSoftmaxLog; }

  // Scalar links only.
  double forward(double z) const;
  double inverse(double y) const;
  double derivative(double z) const;
  double clamp(double y) const;

  // Row-wise versions; scalar links act elementwise, softmax across the row.
  Eigen::RowVectorXd forward(const Eigen::RowVectorXd& z) const;
  Eigen::RowVectorXd inverse(const Eigen::RowVectorXd& y) const;
  Eigen::RowVectorXd clamp(const Eigen::RowVectorXd& y) const;

  /// f^-1 applied to each label row.
  Eigen::MatrixXd inverse_rows(const Eigen::MatrixXd& labels) const;

 private:
  LinkTag tag_;
  double eps_;
};

struct LipschitzBound {
  double L;
  double domain_lo;
  double domain_hi;
};

/// Bi-Lipschitz constant of a scalar link on [lo, hi]: the grid maximum of
/// max(f'(z), 1/f'(z)), floored at one.
LipschitzBound lipschitz_bound(const LinkFunction& link, double domain_lo, double domain_hi,
                               int grid_points = 10000);

}  // namespace tdsl
