#include "riskprof/optim.hpp"

#include <algorithm>
#include <cmath>

#include <Eigen/Dense>

namespace riskprof::optim {

double gradient_measure(const Eigen::VectorXd& x, double value, const Eigen::VectorXd& gradient,
                        bool relative) {
  if (!relative) return gradient.size() ? gradient.cwiseAbs().maxCoeff() : 0.0;
  double worst = 0.0;
  const double denom = std::max(std::abs(value), 1.0);
  for (Eigen::Index i = 0; i < gradient.size(); ++i) {
    worst = std::max(worst, std::abs(gradient[i]) * std::max(std::abs(x[i]), 1.0) / denom);
  }
  return worst;
}

Result minimize_bfgs(const Objective& objective, Eigen::VectorXd x0, const Options& options) {
  const Eigen::Index dim = x0.size();
  Result r;
  r.x = std::move(x0);
  r.gradient = Eigen::VectorXd::Zero(dim);
  r.value = objective(r.x, r.gradient);
  if (!std::isfinite(r.value)) return r;

  Eigen::MatrixXd inv_hessian = Eigen::MatrixXd::Identity(dim, dim);
  bool scaled = false;
  Eigen::VectorXd trial_grad(dim);

  for (r.iterations = 0; r.iterations < options.max_iterations; ++r.iterations) {
    if (gradient_measure(r.x, r.value, r.gradient, options.relative_gradient) <=
        options.gradient_tolerance) {
      r.converged = true;
      return r;
    }
    Eigen::VectorXd direction = -inv_hessian * r.gradient;
    double slope = direction.dot(r.gradient);
    if (!(slope < 0.0)) {
      inv_hessian.setIdentity();
      scaled = false;
      direction = -r.gradient;
      slope = -r.gradient.squaredNorm();
    }
    if (!scaled) {
      // First step from an unscaled identity: cap the step length.
      const double norm = direction.norm();
      if (norm > 1.0) {
        direction /= norm;
        slope /= norm;
      }
    }

    double step = 1.0;
    double trial_value = 0.0;
    Eigen::VectorXd trial_x;
    bool accepted = false;
    for (int k = 0; k < options.max_backtracks; ++k) {
      trial_x = r.x + step * direction;
      trial_value = objective(trial_x, trial_grad);
      if (std::isfinite(trial_value) && trial_value < r.value &&
          trial_value <= r.value + options.armijo * step * slope) {
        accepted = true;
        break;
      }
      step *= 0.5;
    }
    if (!accepted) {
      r.converged = gradient_measure(r.x, r.value, r.gradient, options.relative_gradient) <=
                    options.gradient_tolerance;
      return r;
    }

    const Eigen::VectorXd s = trial_x - r.x;
    const Eigen::VectorXd y = trial_grad - r.gradient;
    const double sy = s.dot(y);
    r.x = std::move(trial_x);
    r.value = trial_value;
    r.gradient = trial_grad;

    if (sy > 1e-12 * s.norm() * y.norm() && sy > 0.0) {
      if (!scaled) {
        inv_hessian = Eigen::MatrixXd::Identity(dim, dim) * (sy / y.squaredNorm());
        scaled = true;
      }
      const double rho = 1.0 / sy;
      const Eigen::VectorXd hy = inv_hessian * y;
      inv_hessian += (rho * rho * y.dot(hy) + rho) * (s * s.transpose()) -
                     rho * (hy * s.transpose() + s * hy.transpose());
    }
  }
  r.converged = gradient_measure(r.x, r.value, r.gradient, options.relative_gradient) <=
                options.gradient_tolerance;
  return r;
}

Eigen::VectorXd central_gradient(const std::function<double(const Eigen::VectorXd&)>& f,
                                 const Eigen::VectorXd& x, double step) {
  Eigen::VectorXd g(x.size());
  Eigen::VectorXd probe = x;
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    probe[i] = x[i] + step;
    const double up = f(probe);
    probe[i] = x[i] - step;
    const double down = f(probe);
    probe[i] = x[i];
    g[i] = (up - down) / (2.0 * step);
  }
  return g;
}

}  // namespace riskprof::optim
