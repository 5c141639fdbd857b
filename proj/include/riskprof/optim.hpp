#pragma once

#include <functional>

#include <Eigen/Core>

namespace riskprof::optim {

/// Value-and-gradient callback for a function being minimized.
using Objective = std::function<double(const Eigen::VectorXd& x, Eigen::VectorXd& gradient)>;

struct Options {
  int max_iterations = 500;
  double gradient_tolerance = 1e-6;
  /// When set, convergence is tested on |g_i| * max(|x_i|, 1) / max(|f|, 1).
  bool relative_gradient = false;
  double armijo = 1e-4;
  int max_backtracks = 60;
};

struct Result {
  Eigen::VectorXd x;
  double value = 0.0;
  Eigen::VectorXd gradient;
  int iterations = 0;
  bool converged = false;
};

/// Gradient norm as used by the convergence test.
double gradient_measure(const Eigen::VectorXd& x, double value, const Eigen::VectorXd& gradient,
                        bool relative);

/// Dense BFGS with backtracking Armijo line search.
Result minimize_bfgs(const Objective& objective, Eigen::VectorXd x0, const Options& options = {});

/// Central-difference gradient of a scalar function.
Eigen::VectorXd central_gradient(const std::function<double(const Eigen::VectorXd&)>& f,
                                 const Eigen::VectorXd& x, double step);

}  // namespace riskprof::optim
