#include "riskprof/spline.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include <Eigen/Dense>

namespace riskprof {

NaturalCubicBasis::NaturalCubicBasis(std::vector<double> knots) : knots_(std::move(knots)) {
  const int k = dimension();
  if (k < 1) throw std::invalid_argument("NaturalCubicBasis: need at least one knot");
  for (int i = 1; i < k; ++i) {
    if (!(knots_[i] > knots_[i - 1])) {
      throw std::invalid_argument("NaturalCubicBasis: knots must be strictly increasing");
    }
  }
  curvature_ = Eigen::MatrixXd::Zero(k, k);
  if (k < 3) return;
  const int m = k - 2;
  Eigen::MatrixXd a = Eigen::MatrixXd::Zero(m, m);
  Eigen::MatrixXd d = Eigen::MatrixXd::Zero(m, k);
  for (int i = 1; i <= m; ++i) {
    const double h0 = knots_[i] - knots_[i - 1], h1 = knots_[i + 1] - knots_[i];
    a(i - 1, i - 1) = (h0 + h1) / 3.0;
    if (i > 1) a(i - 1, i - 2) = h0 / 6.0;
    if (i < m) a(i - 1, i) = h1 / 6.0;
    d(i - 1, i - 1) = 1.0 / h0;
    d(i - 1, i) = -1.0 / h0 - 1.0 / h1;
    d(i - 1, i + 1) = 1.0 / h1;
  }
  curvature_.middleRows(1, m) = a.partialPivLu().solve(d);
}

NaturalCubicBasis NaturalCubicBasis::from_quantiles(std::span<const double> values, int k,
                                                    std::vector<std::string>* warnings) {
  if (values.empty()) throw std::invalid_argument("spline basis: no values");
  if (k < 1) throw std::invalid_argument("spline basis: k must be positive");
  std::vector<double> sorted(values.begin(), values.end());
  std::sort(sorted.begin(), sorted.end());
  std::vector<double> distinct = sorted;
  distinct.erase(std::unique(distinct.begin(), distinct.end()), distinct.end());
  const int available = static_cast<int>(distinct.size());
  if (available < k) {
    if (warnings) {
      warnings->push_back("spline basis: only " + std::to_string(available) +
                          " distinct values; dimension reduced from " + std::to_string(k));
    }
    return NaturalCubicBasis(distinct);
  }
  auto quantiles = [k](const std::vector<double>& v) {
    std::vector<double> q;
    if (k == 1) return std::vector<double>{v[v.size() / 2]};
    for (int j = 0; j < k; ++j) {
      const double pos = static_cast<double>(j) * (v.size() - 1) / (k - 1);
      const auto lo = static_cast<std::size_t>(std::floor(pos));
      const auto hi = std::min(lo + 1, v.size() - 1);
      q.push_back(v[lo] + (pos - lo) * (v[hi] - v[lo]));
    }
    return q;
  };
  std::vector<double> knots = quantiles(sorted);
  if (std::adjacent_find(knots.begin(), knots.end(),
                         [](double a, double b) { return !(b > a); }) != knots.end()) {
    // Heavy ties: place knots on quantiles of the distinct values instead.
    knots = quantiles(distinct);
  }
  return NaturalCubicBasis(std::move(knots));
}

Eigen::VectorXd NaturalCubicBasis::evaluate(double x, int derivative) const {
  const int k = dimension();
  Eigen::VectorXd out = Eigen::VectorXd::Zero(k);
  if (k == 1) {
    if (derivative == 0) out[0] = 1.0;
    return out;
  }
  // Linear extrapolation beyond the boundary knots.
  if (x < knots_.front() || x > knots_.back()) {
    const bool left = x < knots_.front();
    const double edge = left ? knots_.front() : knots_.back();
    if (derivative >= 2) return out;
    const Eigen::VectorXd slope = evaluate(edge, 1);
    if (derivative == 1) return slope;
    return evaluate(edge, 0) + (x - edge) * slope;
  }
  int j = static_cast<int>(std::upper_bound(knots_.begin(), knots_.end(), x) - knots_.begin()) - 1;
  j = std::clamp(j, 0, k - 2);
  const double h = knots_[j + 1] - knots_[j];
  const double right = knots_[j + 1] - x, left = x - knots_[j];
  double a_lo, a_hi, c_lo, c_hi;
  switch (derivative) {
    case 0:
      a_lo = right / h;
      a_hi = left / h;
      c_lo = (right * right * right / h - h * right) / 6.0;
      c_hi = (left * left * left / h - h * left) / 6.0;
      break;
    case 1:
      a_lo = -1.0 / h;
      a_hi = 1.0 / h;
      c_lo = (-3.0 * right * right / h + h) / 6.0;
      c_hi = (3.0 * left * left / h - h) / 6.0;
      break;
    case 2:
      a_lo = a_hi = 0.0;
      c_lo = right / h;
      c_hi = left / h;
      break;
    default: throw std::invalid_argument("NaturalCubicBasis: derivative must be 0, 1 or 2");
  }
  out[j] += a_lo;
  out[j + 1] += a_hi;
  out += c_lo * curvature_.row(j).transpose() + c_hi * curvature_.row(j + 1).transpose();
  return out;
}

Eigen::MatrixXd NaturalCubicBasis::matrix(std::span<const double> xs, int derivative) const {
  Eigen::MatrixXd m(static_cast<Eigen::Index>(xs.size()), dimension());
  for (std::size_t i = 0; i < xs.size(); ++i) m.row(i) = evaluate(xs[i], derivative).transpose();
  return m;
}

CenteredSpline::CenteredSpline(NaturalCubicBasis basis, std::span<const double> training_values)
    : basis_(std::move(basis)) {
  const Eigen::MatrixXd b = basis_.matrix(training_values);
  const Eigen::VectorXd sums = b.colwise().sum().transpose();
  const int k = basis_.dimension();
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(sums);
  const Eigen::MatrixXd q = qr.householderQ() * Eigen::MatrixXd::Identity(k, k);
  null_space_ = q.rightCols(k - 1);
}

CenteredSpline CenteredSpline::from_parts(NaturalCubicBasis basis, Eigen::MatrixXd null_space) {
  CenteredSpline s;
  s.basis_ = std::move(basis);
  s.null_space_ = std::move(null_space);
  return s;
}

Eigen::MatrixXd CenteredSpline::matrix(std::span<const double> xs) const {
  return basis_.matrix(xs) * null_space_;
}

}  // namespace riskprof
