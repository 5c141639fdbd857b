#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "riskprof/glmm.hpp"

namespace riskprof {

struct FitConfig {
  int draws = 1000;
  int max_outer_iterations = 200;
  int max_inner_iterations = 200;
  /// Max-abs gradient of the log joint over the latent block at its mode.
  double inner_tolerance = 1e-8;
  /// Relative gradient of the Laplace marginal over log sigma.
  double outer_tolerance = 1e-6;
  double fd_step = 1e-4;
  double initial_sigma = 0.5;
};

struct FitDiagnostics {
  bool converged = false;
  /// Max of the scaled latent and log-sigma gradients at the returned mode.
  double gradient_norm = 0.0;
  double latent_gradient = 0.0;
  double sigma_gradient = 0.0;
  int outer_iterations = 0;
  int inner_iterations = 0;
  bool hessian_jittered = false;
  double log_marginal = 0.0;
  std::vector<std::string> notes;
};

/// Posterior approximation for one model. `draws` holds one parameter vector
/// per column, in Design::layout order, with log sigma on the unconstrained
/// scale.
struct ModelFit {
  ModelSpec spec;
  Priors priors;
  FitConfig config;
  std::uint64_t seed = 0;
  std::vector<ModelRow> rows;
  Design design;
  Eigen::VectorXd mode;
  /// Cholesky factor (lower) of the negative Hessian of the Laplace marginal
  /// over log sigma.
  Eigen::MatrixXd sigma_precision_factor;
  /// Log determinant of the latent-block negative Hessian at the mode.
  double latent_log_det = 0.0;
  Eigen::MatrixXd draws;
  FitDiagnostics diagnostics;

  std::size_t draw_count() const { return static_cast<std::size_t>(draws.cols()); }
};

/// Mode of the log posterior with a Laplace approximation: level scales are
/// set at the mode of their Laplace-integrated marginal, the latent block at
/// its conditional mode. Draws come from the resulting Gaussian. Identical
/// inputs and seed give bitwise-identical fits.
ModelFit fit_map(std::span<const ModelRow> rows, const ModelSpec& spec, const Priors& priors,
                 const FitConfig& config, std::uint64_t seed);

/// Binary archive of a fit (spec, priors, rows, mode, draws, diagnostics).
void save_fit(std::ostream& out, const ModelFit& fit);
ModelFit load_fit(std::istream& in);

}  // namespace riskprof
