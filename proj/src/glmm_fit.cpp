#include "riskprof/glmm_fit.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <limits>
#include <ostream>
#include <random>

#include <Eigen/Dense>
#include <Eigen/SparseCholesky>
#include <cereal/archives/portable_binary.hpp>
#include <cereal/types/string.hpp>
#include <cereal/types/vector.hpp>

#include "riskprof/optim.hpp"

namespace riskprof {

namespace {

constexpr double kMinLogSigma = -9.0;
constexpr double kMaxLogSigma = 4.0;

double t_curvature(double x, double df, double scale) {
  const double v = df * scale * scale;
  return (df + 1.0) * (v - x * x) / ((v + x * x) * (v + x * x));
}

// Newton solver for the latent block with the level scales held fixed. The
// negative Hessian keeps one sparsity pattern for the life of the design, so
// the fill-reducing ordering is computed once.
class LatentSolver {
 public:
  struct Mode {
    double log_joint = 0.0;
    double log_det = 0.0;
    double gradient = 0.0;
    int iterations = 0;
    bool converged = false;
    bool jittered = false;
  };

  LatentSolver(const Design& design, const Priors& priors) : design_(design), priors_(priors) {
    const auto& layout = design_.layout;
    const auto latent = static_cast<Eigen::Index>(layout.latent_size());
    width_ = 1 + layout.group_count() + layout.spline_size;

    std::vector<Eigen::Triplet<double>> pattern;
    std::vector<int> cols(width_);
    for (std::size_t i = 0; i < design_.rows(); ++i) {
      row_columns(i, cols);
      for (std::size_t a = 0; a < width_; ++a) {
        for (std::size_t b = 0; b <= a; ++b) pattern.emplace_back(std::max(cols[a], cols[b]), std::min(cols[a], cols[b]), 0.0);
      }
    }
    for (Eigen::Index j = 0; j < latent; ++j) pattern.emplace_back(j, j, 0.0);
    hessian_.resize(latent, latent);
    hessian_.setFromTriplets(pattern.begin(), pattern.end());
    hessian_.makeCompressed();

    slots_.reserve(design_.rows() * width_ * (width_ + 1) / 2);
    for (std::size_t i = 0; i < design_.rows(); ++i) {
      row_columns(i, cols);
      for (std::size_t a = 0; a < width_; ++a) {
        for (std::size_t b = 0; b <= a; ++b) slots_.push_back(slot(std::max(cols[a], cols[b]), std::min(cols[a], cols[b])));
      }
    }
    diagonal_slots_.resize(static_cast<std::size_t>(latent));
    for (Eigen::Index j = 0; j < latent; ++j) diagonal_slots_[j] = slot(static_cast<int>(j), static_cast<int>(j));
    ldlt_.analyzePattern(hessian_);
  }

  // Moves the latent block of `params` to its conditional mode.
  Mode find_mode(Eigen::VectorXd& params, int max_iterations, double tolerance) {
    const auto latent = static_cast<Eigen::Index>(design_.layout.latent_size());
    Mode mode;
    Eigen::VectorXd grad, trial_grad;
    double lp = log_posterior(params, design_, priors_, &grad);
    for (mode.iterations = 0; mode.iterations < max_iterations; ++mode.iterations) {
      mode.gradient = grad.head(latent).cwiseAbs().maxCoeff();
      if (mode.gradient <= tolerance) {
        mode.converged = true;
        break;
      }
      if (!factorize(params, mode.jittered)) break;
      const Eigen::VectorXd step = ldlt_.solve(grad.head(latent));
      const double slope = step.dot(grad.head(latent));
      // Half the Newton decrement bounds the remaining ascent.
      if (0.5 * slope <= 1e-13 * std::max(1.0, std::abs(lp)) && mode.gradient <= 1e-6) {
        mode.converged = true;
        break;
      }
      double t = 1.0;
      bool accepted = false;
      Eigen::VectorXd trial = params;
      for (int k = 0; k < 40; ++k) {
        trial.head(latent) = params.head(latent) + t * step;
        const double trial_lp = log_posterior(trial, design_, priors_, &trial_grad);
        // Near the mode the full step is taken when it loses nothing beyond
        // rounding, so the gradient keeps shrinking.
        const bool ascent = trial_lp >= lp + 1e-4 * t * slope ||
                            (k == 0 && trial_lp >= lp - 1e-12 * std::max(1.0, std::abs(lp)));
        if (std::isfinite(trial_lp) && ascent) {
          accepted = true;
          params = trial;
          lp = trial_lp;
          grad = trial_grad;
          break;
        }
        t *= 0.5;
      }
      if (!accepted) {
        // No ascent along the Newton direction: the mode is found to rounding.
        mode.converged = mode.gradient <= 1e3 * tolerance;
        break;
      }
    }
    mode.gradient = grad.head(latent).cwiseAbs().maxCoeff();
    mode.log_joint = lp;
    if (!factorize(params, mode.jittered)) {
      throw NumericalError("latent Hessian could not be factorized");
    }
    mode.log_det = ldlt_.vectorD().array().log().sum();
    return mode;
  }

  // Draws N(0, H^-1) for the most recently factorized Hessian.
  Eigen::VectorXd sample(const Eigen::VectorXd& standard_normal) const {
    const Eigen::VectorXd scaled = standard_normal.cwiseQuotient(ldlt_.vectorD().cwiseSqrt());
    const Eigen::VectorXd solved = ldlt_.matrixU().solve(scaled);
    return ldlt_.permutationPinv() * solved;
  }

 private:
  void row_columns(std::size_t i, std::vector<int>& cols) const {
    const auto& layout = design_.layout;
    std::size_t k = 0;
    cols[k++] = 0;
    for (std::size_t g = 0; g < layout.group_count(); ++g) {
      cols[k++] = static_cast<int>(layout.group_offset[g]) + design_.row_level[g][i];
    }
    for (std::size_t j = 0; j < layout.spline_size; ++j) {
      cols[k++] = static_cast<int>(layout.spline_offset + j);
    }
  }

  int slot(int row, int col) const {
    const int* inner = hessian_.innerIndexPtr();
    const int begin = hessian_.outerIndexPtr()[col], end = hessian_.outerIndexPtr()[col + 1];
    const int* it = std::lower_bound(inner + begin, inner + end, row);
    return static_cast<int>(it - inner);
  }

  void assemble(const Eigen::VectorXd& params) {
    const auto& layout = design_.layout;
    double* values = hessian_.valuePtr();
    std::fill(values, values + hessian_.nonZeros(), 0.0);
    const Eigen::VectorXd eta = linear_predictor(params, design_);
    std::vector<double> v(width_, 1.0);
    std::size_t s = 0;
    for (std::size_t i = 0; i < design_.rows(); ++i) {
      const double p = inv_logit(eta[static_cast<Eigen::Index>(i)]);
      const double w = design_.n[i] * p * (1.0 - p);
      for (std::size_t j = 0; j < layout.spline_size; ++j) {
        v[1 + layout.group_count() + j] = design_.spline_rows(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
      }
      for (std::size_t a = 0; a < width_; ++a) {
        const double wa = w * v[a];
        for (std::size_t b = 0; b <= a; ++b) values[slots_[s++]] += wa * v[b];
      }
    }
    // Prior curvature; the heavy-tailed terms are floored at zero so the
    // Newton matrix stays positive definite.
    values[diagonal_slots_[0]] +=
        std::max(0.0, t_curvature(params[0], priors_.df, priors_.intercept_scale));
    for (std::size_t g = 0; g < layout.group_count(); ++g) {
      const double inv_var = std::exp(-2.0 * params[static_cast<Eigen::Index>(layout.sigma_offset + g)]);
      for (std::size_t j = 0; j < layout.group_size[g]; ++j) {
        values[diagonal_slots_[layout.group_offset[g] + j]] += inv_var;
      }
    }
    for (std::size_t j = 0; j < layout.spline_size; ++j) {
      const double c = params[static_cast<Eigen::Index>(layout.spline_offset + j)];
      values[diagonal_slots_[layout.spline_offset + j]] +=
          std::max(0.0, t_curvature(c, priors_.df, priors_.coef_scale));
    }
  }

  bool factorize(const Eigen::VectorXd& params, bool& jittered) {
    assemble(params);
    ldlt_.factorize(hessian_);
    if (ldlt_.info() == Eigen::Success && (ldlt_.vectorD().array() > 0.0).all()) return true;
    double* values = hessian_.valuePtr();
    for (double jitter = 1e-8; jitter <= 1e2; jitter *= 10.0) {
      for (int d : diagonal_slots_) values[d] += jitter;
      ldlt_.factorize(hessian_);
      if (ldlt_.info() == Eigen::Success && (ldlt_.vectorD().array() > 0.0).all()) {
        jittered = true;
        return true;
      }
    }
    return false;
  }

  const Design& design_;
  const Priors& priors_;
  std::size_t width_ = 0;
  Eigen::SparseMatrix<double> hessian_;
  std::vector<int> slots_;
  std::vector<int> diagonal_slots_;
  Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>, Eigen::Lower, Eigen::AMDOrdering<int>> ldlt_;
};

// Nearest positive-definite matrix by eigenvalue floor; returns true if changed.
bool make_positive_definite(Eigen::MatrixXd& m) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(0.5 * (m + m.transpose()));
  Eigen::VectorXd values = eig.eigenvalues();
  const double floor = std::max(1e-6, 1e-8 * values.cwiseAbs().maxCoeff());
  if ((values.array() >= floor).all()) return false;
  values = values.cwiseMax(floor);
  m = eig.eigenvectors() * values.asDiagonal() * eig.eigenvectors().transpose();
  return true;
}

}  // namespace

ModelFit fit_map(std::span<const ModelRow> rows, const ModelSpec& spec, const Priors& priors,
                 const FitConfig& config, std::uint64_t seed) {
  if (rows.empty()) throw ValidationError("fit_map: no rows");
  if (config.draws < 1) throw ValidationError("fit_map: draws must be positive");
  ModelFit fit;
  fit.spec = spec;
  fit.priors = priors;
  fit.config = config;
  fit.seed = seed;
  fit.rows.assign(rows.begin(), rows.end());
  fit.design = Design::build(fit.rows, spec, priors);
  fit.diagnostics.notes = fit.design.warnings;

  const Design& design = fit.design;
  const auto& layout = design.layout;
  const auto groups = static_cast<Eigen::Index>(layout.group_count());
  const auto sigma_at = static_cast<Eigen::Index>(layout.sigma_offset);

  Eigen::VectorXd params = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(layout.total));
  double xs = 0.0, ns = 0.0;
  for (std::size_t i = 0; i < design.rows(); ++i) {
    xs += design.x[i];
    ns += design.n[i];
  }
  const double pooled = std::clamp((xs + 0.5) / (ns + 1.0), 1e-6, 1.0 - 1e-6);
  params[0] = std::log(pooled / (1.0 - pooled));
  params.tail(groups).setConstant(std::log(config.initial_sigma));

  LatentSolver solver(design, priors);
  int inner_iterations = 0;
  bool jittered = false;
  auto laplace_marginal = [&](const Eigen::VectorXd& log_sigma) {
    if ((log_sigma.array() < kMinLogSigma).any() || (log_sigma.array() > kMaxLogSigma).any()) {
      return -std::numeric_limits<double>::infinity();
    }
    params.tail(groups) = log_sigma;
    const auto mode = solver.find_mode(params, config.max_inner_iterations, config.inner_tolerance);
    inner_iterations += mode.iterations;
    jittered = jittered || mode.jittered;
    return mode.log_joint - 0.5 * mode.log_det;
  };

  Eigen::VectorXd log_sigma = params.tail(groups);
  optim::Result outer;
  if (groups > 0) {
    auto objective = [&](const Eigen::VectorXd& z, Eigen::VectorXd& grad) {
      const double value = laplace_marginal(z);
      if (!std::isfinite(value)) {
        grad = Eigen::VectorXd::Zero(z.size());
        return std::numeric_limits<double>::infinity();
      }
      grad = -optim::central_gradient(laplace_marginal, z, config.fd_step);
      return -value;
    };
    optim::Options options;
    options.max_iterations = config.max_outer_iterations;
    options.gradient_tolerance = config.outer_tolerance;
    options.relative_gradient = true;
    outer = optim::minimize_bfgs(objective, log_sigma, options);
    log_sigma = outer.x;
  }

  // Final conditional mode at the selected scales; leaves the solver factorized there.
  params.tail(groups) = log_sigma;
  const auto mode = solver.find_mode(params, config.max_inner_iterations, config.inner_tolerance);
  inner_iterations += mode.iterations;
  fit.mode = params;
  fit.latent_log_det = mode.log_det;

  auto& diag = fit.diagnostics;
  diag.log_marginal = mode.log_joint - 0.5 * mode.log_det;
  diag.latent_gradient = mode.gradient;
  diag.outer_iterations = outer.iterations;
  diag.hessian_jittered = jittered || mode.jittered;

  // Curvature of the marginal over log sigma by second differences.
  Eigen::MatrixXd precision = Eigen::MatrixXd::Zero(groups, groups);
  if (groups > 0) {
    const Eigen::VectorXd grad = optim::central_gradient(laplace_marginal, log_sigma, config.fd_step);
    diag.sigma_gradient =
        optim::gradient_measure(log_sigma, diag.log_marginal, grad, /*relative=*/true);
    const double h = 1e-3;
    const double center = laplace_marginal(log_sigma);
    for (Eigen::Index a = 0; a < groups; ++a) {
      Eigen::VectorXd p = log_sigma;
      p[a] += h;
      const double up = laplace_marginal(p);
      p[a] -= 2 * h;
      const double down = laplace_marginal(p);
      precision(a, a) = -(up - 2 * center + down) / (h * h);
      for (Eigen::Index b = 0; b < a; ++b) {
        Eigen::VectorXd q = log_sigma;
        double corners[4];
        int k = 0;
        for (double sa : {1.0, -1.0}) {
          for (double sb : {1.0, -1.0}) {
            q = log_sigma;
            q[a] += sa * h;
            q[b] += sb * h;
            corners[k++] = laplace_marginal(q);
          }
        }
        precision(a, b) = precision(b, a) =
            -(corners[0] - corners[1] - corners[2] + corners[3]) / (4 * h * h);
      }
    }
    if (!precision.allFinite()) throw NumericalError("fit_map: non-finite log-sigma curvature");
    if (make_positive_definite(precision)) {
      diag.hessian_jittered = true;
      diag.notes.push_back("log-sigma Hessian not positive definite; floored eigenvalues");
    }
    // Restore the latent mode and its factorization at the selected scales.
    params = fit.mode;
    solver.find_mode(params, config.max_inner_iterations, config.inner_tolerance);
  }
  diag.inner_iterations = inner_iterations;
  diag.gradient_norm = std::max(diag.latent_gradient, diag.sigma_gradient);
  diag.converged = mode.converged && diag.latent_gradient <= 1e-5 && diag.sigma_gradient <= 1e-5;
  if (!diag.converged) diag.notes.push_back("optimizer did not reach tolerance");

  Eigen::LLT<Eigen::MatrixXd> sigma_llt(precision);
  fit.sigma_precision_factor = groups > 0 ? Eigen::MatrixXd(sigma_llt.matrixL())
                                          : Eigen::MatrixXd(0, 0);

  // Gaussian draws: latent block from the sparse factor, log sigma from the
  // dense factor, standard normals consumed in a fixed order.
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal;
  const auto latent = static_cast<Eigen::Index>(layout.latent_size());
  fit.draws.resize(static_cast<Eigen::Index>(layout.total), config.draws);
  Eigen::VectorXd z_latent(latent), z_sigma(groups);
  for (int s = 0; s < config.draws; ++s) {
    for (Eigen::Index j = 0; j < latent; ++j) z_latent[j] = normal(rng);
    for (Eigen::Index j = 0; j < groups; ++j) z_sigma[j] = normal(rng);
    fit.draws.col(s).head(latent) = fit.mode.head(latent) + solver.sample(z_latent);
    if (groups > 0) {
      fit.draws.col(s).segment(sigma_at, groups) =
          fit.mode.segment(sigma_at, groups) +
          sigma_llt.matrixU().solve(z_sigma);
    }
  }
  return fit;
}

namespace {

template <class Archive>
void archive_matrix(Archive& ar, Eigen::MatrixXd& m) {
  std::int64_t rows = m.rows(), cols = m.cols();
  ar(rows, cols);
  std::vector<double> data(m.data(), m.data() + m.size());
  ar(data);
  if (static_cast<std::int64_t>(data.size()) != rows * cols) throw ValidationError("corrupt fit archive");
  m = Eigen::Map<Eigen::MatrixXd>(data.data(), rows, cols);
}

constexpr std::uint32_t kArchiveVersion = 1;

}  // namespace

void save_fit(std::ostream& out, const ModelFit& fit) {
  cereal::PortableBinaryOutputArchive ar(out);
  ModelFit& f = const_cast<ModelFit&>(fit);
  ar(kArchiveVersion, static_cast<std::uint8_t>(f.spec.id));
  ar(f.priors.df, f.priors.intercept_scale, f.priors.coef_scale, f.priors.sigma_df,
     f.priors.sigma_scale, f.priors.spline_dim);
  ar(f.config.draws, f.config.max_outer_iterations, f.config.max_inner_iterations,
     f.config.inner_tolerance, f.config.outer_tolerance, f.config.fd_step, f.config.initial_sigma);
  ar(f.seed);
  std::uint64_t count = f.rows.size();
  ar(count);
  for (auto& r : f.rows) {
    ar(r.supplier_id, r.tariff_id, r.year, r.x, r.n, r.prev_regulated_rate,
       r.prev_non_regulated_rate, r.prev_administrative_rate, r.prev_imputed);
  }
  Eigen::MatrixXd mode = f.mode;
  archive_matrix(ar, mode);
  archive_matrix(ar, f.sigma_precision_factor);
  archive_matrix(ar, f.draws);
  auto& d = f.diagnostics;
  ar(f.latent_log_det, d.converged, d.gradient_norm, d.latent_gradient, d.sigma_gradient,
     d.outer_iterations, d.inner_iterations, d.hessian_jittered, d.log_marginal, d.notes);
}

ModelFit load_fit(std::istream& in) {
  cereal::PortableBinaryInputArchive ar(in);
  ModelFit f;
  std::uint32_t version = 0;
  std::uint8_t id = 0;
  ar(version, id);
  if (version != kArchiveVersion || id >= kAllModels.size()) {
    throw ValidationError("unsupported fit archive");
  }
  f.spec = ModelSpec::make(static_cast<ModelId>(id));
  ar(f.priors.df, f.priors.intercept_scale, f.priors.coef_scale, f.priors.sigma_df,
     f.priors.sigma_scale, f.priors.spline_dim);
  ar(f.config.draws, f.config.max_outer_iterations, f.config.max_inner_iterations,
     f.config.inner_tolerance, f.config.outer_tolerance, f.config.fd_step, f.config.initial_sigma);
  ar(f.seed);
  std::uint64_t count = 0;
  ar(count);
  f.rows.resize(count);
  for (auto& r : f.rows) {
    ar(r.supplier_id, r.tariff_id, r.year, r.x, r.n, r.prev_regulated_rate,
       r.prev_non_regulated_rate, r.prev_administrative_rate, r.prev_imputed);
  }
  Eigen::MatrixXd mode;
  archive_matrix(ar, mode);
  f.mode = mode.col(0);
  archive_matrix(ar, f.sigma_precision_factor);
  archive_matrix(ar, f.draws);
  auto& d = f.diagnostics;
  ar(f.latent_log_det, d.converged, d.gradient_norm, d.latent_gradient, d.sigma_gradient,
     d.outer_iterations, d.inner_iterations, d.hessian_jittered, d.log_marginal, d.notes);
  f.design = Design::build(f.rows, f.spec, f.priors);
  if (static_cast<std::size_t>(f.mode.size()) != f.design.layout.total) {
    throw ValidationError("fit archive does not match its rows");
  }
  return f;
}

}  // namespace riskprof
