#pragma once

#include <span>
#include <vector>

#include "leaklab/gaussian_world.hpp"
#include "leaklab/schedule.hpp"
#include "leaklab/video.hpp"

namespace leaklab {

/// Isotropic Gaussian N(mu_p, sigma_p2 I) used to seed sampling at start time M.
struct InitDistribution {
  Vector mu_p;  ///< flattened, length N*d
  double sigma_p2 = 1.0;
  double M = 1.0;

  void validate() const;
};

/// First and averaged second moments of X_0 over the flattened dimension N*d.
struct DataMoments {
  Vector mean;
  double avg_var = 0.0;
  std::size_t n_samples = 0;
};

/// Method-of-moments estimate. Variance uses the population divisor n.
DataMoments estimate_moments(std::span<const Video> samples);

/// Exact moments of a Gaussian world prior (n_samples = 0 marks them as exact).
DataMoments world_moments(const GaussianWorld& world);

/// KL-optimal isotropic Gaussian at time M:
///   mu_p = alpha_M E[X_0],  sigma_p2 = alpha_M^2 avg_j Var(X_0^(j)) + sigma_M^2.
InitDistribution optimal_init(const DataMoments& moments, const NoiseSchedule& schedule, double M);

/// N(0, I) for VP, N(0, sigma_M^2 I) for VE.
InitDistribution standard_init(const NoiseSchedule& schedule, double M, Eigen::Index flat_dim);

/// Exact KL(N(mu_q, Sigma_q) || N(mu_p, sigma_p2 I)). Sigma_q must be symmetric positive definite.
double gaussian_kl(const Vector& mu_q, const Eigen::MatrixXd& sigma_q, const InitDistribution& init);

/// Grid of perturbations (mu_p + s * direction, kappa * sigma_p2) around an optimum.
struct PerturbationGrid {
  std::vector<double> kappas;
  std::vector<double> shifts;
  Vector direction;  ///< unit vector

  /// 9 x 9 grid: kappa = 2^((k-4)/4) in [0.5, 2], shift = (k-4)/4 in [-1, 1].
  static PerturbationGrid standard(Eigen::Index flat_dim);
};

struct GridCell {
  double kappa;
  double shift;
  double kl;
};

struct OptimalityReport {
  InitDistribution optimum;
  double kl_optimum = 0.0;
  std::vector<GridCell> cells;
  /// min over non-optimal cells of KL(cell) - KL(optimum).
  double min_margin = 0.0;
  /// |sigma_p2* - tr(Sigma_q)/d| relative to max(1, tr(Sigma_q)/d).
  double variance_formula_error = 0.0;
  /// max |mu_p* - mu_q| relative to max(1, |mu_q|_inf).
  double mean_formula_error = 0.0;
  bool passed = false;
};

inline constexpr double kOptimalityMargin = 1e-9;
inline constexpr double kFormulaTolerance = 1e-10;

/// Evaluates the KL at the closed-form optimum (computed from `moments`) and on every grid cell
/// against the exact marginal (mu_q, Sigma_q), and cross-checks the optimum against the
/// trace form tr(Sigma_q)/d of the optimal variance.
OptimalityReport verify_optimality(const DataMoments& moments, const Vector& mu_q, const Eigen::MatrixXd& sigma_q,
                                   const NoiseSchedule& schedule, double M, const PerturbationGrid& grid);

/// Convenience: exact marginal of a Gaussian world at M, flattened.
struct FlatGaussian {
  Vector mean;
  Eigen::MatrixXd cov;
};
FlatGaussian flat_marginal(const GaussianWorld& world, const NoiseSchedule& schedule, double M);

}  // namespace leaklab
