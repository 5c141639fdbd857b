#include <cmath>
#include <random>

#include <Eigen/Dense>
#include <gtest/gtest.h>

#include "riskprof/spline.hpp"

using namespace riskprof;

namespace {

std::vector<double> uniform_values(std::mt19937_64& rng, int count) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<double> v(count);
  for (auto& x : v) x = u(rng);
  return v;
}

}  // namespace

TEST(NaturalCubicBasis, ConstantValuesReduceToConstantBasis) {
  const std::vector<double> values(20, 0.3);
  std::vector<std::string> warnings;
  const auto basis = NaturalCubicBasis::from_quantiles(values, 5, &warnings);
  EXPECT_EQ(basis.dimension(), 1);
  EXPECT_EQ(warnings.size(), 1u);
  const Eigen::MatrixXd x = basis.matrix(values);
  const Eigen::VectorXd target = Eigen::VectorXd::Constant(20, 0.7);
  const Eigen::VectorXd coef = x.colPivHouseholderQr().solve(target);
  EXPECT_LT((x * coef - target).norm(), 1e-12);
}

TEST(NaturalCubicBasis, FewDistinctValuesDropDimension) {
  const std::vector<double> values{0.1, 0.1, 0.2, 0.2, 0.9, 0.9};
  std::vector<std::string> warnings;
  const auto basis = NaturalCubicBasis::from_quantiles(values, 5, &warnings);
  EXPECT_EQ(basis.dimension(), 3);
  EXPECT_FALSE(warnings.empty());
}

TEST(NaturalCubicBasis, ThreeKnotsAreWellPosed) {
  const std::vector<double> values{0.0, 0.5, 1.0};
  const auto basis = NaturalCubicBasis::from_quantiles(values, 3);
  ASSERT_EQ(basis.dimension(), 3);
  const Eigen::MatrixXd m = basis.matrix(values);
  EXPECT_TRUE(m.allFinite());
  EXPECT_GT((m.row(0) - m.row(1)).norm(), 0.1);
  EXPECT_GT((m.row(1) - m.row(2)).norm(), 0.1);
  EXPECT_GT((m.row(0) - m.row(2)).norm(), 0.1);
}

TEST(NaturalCubicBasis, CardinalAtKnotsAndPartitionOfUnity) {
  std::mt19937_64 rng(3);
  const auto values = uniform_values(rng, 200);
  const auto basis = NaturalCubicBasis::from_quantiles(values, 5);
  ASSERT_EQ(basis.dimension(), 5);
  const auto& knots = basis.knots();
  for (int i = 0; i < 5; ++i) {
    const Eigen::VectorXd b = basis.evaluate(knots[i]);
    for (int j = 0; j < 5; ++j) EXPECT_NEAR(b[j], i == j ? 1.0 : 0.0, 1e-12);
  }
  for (double x : {-0.5, 0.0, 0.13, 0.5, 0.77, 1.0, 1.6}) {
    EXPECT_NEAR(basis.evaluate(x).sum(), 1.0, 1e-12);
  }
}

TEST(NaturalCubicBasis, ReproducesLinearFunctions) {
  // Lines are natural cubic splines, so interpolating one is exact everywhere.
  const NaturalCubicBasis basis({0.05, 0.2, 0.45, 0.6, 0.9});
  Eigen::VectorXd coef(5);
  for (int j = 0; j < 5; ++j) coef[j] = 1.5 - 2.0 * basis.knots()[j];
  for (double x = -0.3; x <= 1.3; x += 0.01) {
    EXPECT_NEAR(basis.evaluate(x).dot(coef), 1.5 - 2.0 * x, 1e-12);
  }
}

TEST(NaturalCubicBasis, SecondDerivativeContinuousAndNatural) {
  std::mt19937_64 rng(7);
  for (int rep = 0; rep < 20; ++rep) {
    const auto values = uniform_values(rng, 100);
    const auto basis = NaturalCubicBasis::from_quantiles(values, 5);
    const Eigen::MatrixXd x = basis.matrix(values);
    Eigen::VectorXd target(values.size());
    for (std::size_t i = 0; i < values.size(); ++i) target[i] = std::sin(6 * values[i]) + 0.1 * static_cast<double>(i % 3);
    const Eigen::VectorXd coef = x.colPivHouseholderQr().solve(target);
    const auto& knots = basis.knots();
    const double eps = 1e-12;
    for (std::size_t i = 0; i < knots.size(); ++i) {
      for (int d = 0; d <= 2; ++d) {
        const double left = basis.evaluate(knots[i] - eps, d).dot(coef);
        const double right = basis.evaluate(knots[i] + eps, d).dot(coef);
        EXPECT_NEAR(left, right, 1e-8) << "knot " << i << " derivative " << d;
      }
    }
    EXPECT_NEAR(basis.evaluate(knots.front(), 2).dot(coef), 0.0, 1e-8);
    EXPECT_NEAR(basis.evaluate(knots.back(), 2).dot(coef), 0.0, 1e-8);
    EXPECT_NEAR(basis.evaluate(knots.back() + 0.5, 2).dot(coef), 0.0, 1e-12);
    // Linear beyond the boundary: equal slopes at two outside points.
    EXPECT_NEAR(basis.evaluate(-1.0, 1).dot(coef), basis.evaluate(-0.2, 1).dot(coef), 1e-10);
  }
}

TEST(NaturalCubicBasis, FullColumnRankOnGenericInputs) {
  std::mt19937_64 rng(11);
  const auto values = uniform_values(rng, 60);
  const auto basis = NaturalCubicBasis::from_quantiles(values, 5);
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(basis.matrix(values));
  EXPECT_EQ(qr.rank(), 5);
}

TEST(NaturalCubicBasis, RejectsBadInput) {
  EXPECT_THROW(NaturalCubicBasis({0.2, 0.1}), std::invalid_argument);
  EXPECT_THROW(NaturalCubicBasis::from_quantiles(std::vector<double>{}, 3), std::invalid_argument);
  const NaturalCubicBasis b({0.0, 1.0});
  EXPECT_THROW(b.evaluate(0.5, 3), std::invalid_argument);
}

TEST(CenteredSpline, SumsToZeroOverTrainingValues) {
  std::mt19937_64 rng(5);
  const auto values = uniform_values(rng, 150);
  const CenteredSpline s(NaturalCubicBasis::from_quantiles(values, 5), values);
  EXPECT_EQ(s.dimension(), 4);
  const Eigen::MatrixXd m = s.matrix(values);
  EXPECT_LT(m.colwise().sum().cwiseAbs().maxCoeff(), 1e-10);
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(m);
  EXPECT_EQ(qr.rank(), 4);
  const auto copy = CenteredSpline::from_parts(s.basis(), s.constraint_null_space());
  EXPECT_EQ(copy.matrix(values), m);
}
