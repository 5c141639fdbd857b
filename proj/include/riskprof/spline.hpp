#pragma once

#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>

namespace riskprof {

/// Natural cubic regression spline in cardinal form: basis function j is the
/// natural cubic spline through (knot_i, [i == j]). The basis is C2, linear
/// beyond the boundary knots, and sums to one everywhere.
class NaturalCubicBasis {
 public:
  NaturalCubicBasis() = default;
  /// Knots must be strictly increasing.
  explicit NaturalCubicBasis(std::vector<double> knots);

  /// Knots at empirical quantiles of `values`. If there are fewer distinct
  /// values than `k`, the dimension drops to the distinct count and a warning
  /// is appended.
  static NaturalCubicBasis from_quantiles(std::span<const double> values, int k,
                                          std::vector<std::string>* warnings = nullptr);

  int dimension() const { return static_cast<int>(knots_.size()); }
  const std::vector<double>& knots() const { return knots_; }

  /// Basis values (derivative 0), slopes (1) or curvatures (2) at x.
  Eigen::VectorXd evaluate(double x, int derivative = 0) const;
  Eigen::MatrixXd matrix(std::span<const double> xs, int derivative = 0) const;

 private:
  std::vector<double> knots_;
  // Maps knot values to knot second derivatives (zero at both ends).
  Eigen::MatrixXd curvature_;
};

/// Basis with the sum-to-zero constraint over the training values absorbed,
/// so the term is identifiable next to an intercept. Has dimension K - 1.
class CenteredSpline {
 public:
  CenteredSpline() = default;
  CenteredSpline(NaturalCubicBasis basis, std::span<const double> training_values);

  const NaturalCubicBasis& basis() const { return basis_; }
  const Eigen::MatrixXd& constraint_null_space() const { return null_space_; }
  int dimension() const { return static_cast<int>(null_space_.cols()); }
  Eigen::MatrixXd matrix(std::span<const double> xs) const;

  /// Rebuild from stored parts.
  static CenteredSpline from_parts(NaturalCubicBasis basis, Eigen::MatrixXd null_space);

 private:
  NaturalCubicBasis basis_;
  Eigen::MatrixXd null_space_;
};

}  // namespace riskprof
