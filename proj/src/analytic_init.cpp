#include "leaklab/analytic_init.hpp"

#include <cmath>
#include <limits>

#include "leaklab/errors.hpp"

namespace leaklab {

void InitDistribution::validate() const {
  if (!(sigma_p2 > 0.0) || !std::isfinite(sigma_p2)) throw ConfigError("init distribution: sigma_p2 must be > 0");
  if (!mu_p.allFinite()) throw ConfigError("init distribution: mu_p must be finite");
  if (!(M > 0.0 && M <= 1.0)) throw ConfigError("init distribution: M must lie in (0, 1]");
}

DataMoments estimate_moments(std::span<const Video> samples) {
  if (samples.size() < 2) throw InsufficientDataError("estimate_moments needs at least 2 samples");
  const auto rows = samples.front().rows();
  const auto cols = samples.front().cols();
  const Eigen::Index flat = rows * cols;

  Vector sum = Vector::Zero(flat);
  for (const Video& v : samples) {
    if (v.rows() != rows || v.cols() != cols) throw ShapeError("estimate_moments: samples differ in shape");
    sum += flatten(v);
  }
  const double n = static_cast<double>(samples.size());
  DataMoments m;
  m.mean = sum / n;
  m.n_samples = samples.size();

  // Two-pass variance around the sample mean.
  double sq = 0.0;
  for (const Video& v : samples) sq += (flatten(v) - m.mean).squaredNorm();
  m.avg_var = sq / n / static_cast<double>(flat);
  return m;
}

DataMoments world_moments(const GaussianWorld& world) {
  const FrameMoments prior = prior_moments(world);
  DataMoments m;
  m.mean = flatten(prior.mean);
  m.avg_var = prior.frame_cov.trace() / world.frames;
  m.n_samples = 0;
  return m;
}

InitDistribution optimal_init(const DataMoments& moments, const NoiseSchedule& schedule, double M) {
  if (!(M > 0.0 && M <= 1.0)) throw DomainError("start time M must lie in (0, 1]");
  const auto [alpha, sigma] = alpha_sigma(schedule, M);
  InitDistribution init;
  init.mu_p = alpha * moments.mean;
  init.sigma_p2 = alpha * alpha * moments.avg_var + sigma * sigma;
  init.M = M;
  return init;
}

InitDistribution standard_init(const NoiseSchedule& schedule, double M, Eigen::Index flat_dim) {
  if (!(M > 0.0 && M <= 1.0)) throw DomainError("start time M must lie in (0, 1]");
  InitDistribution init;
  init.mu_p = Vector::Zero(flat_dim);
  init.sigma_p2 = standard_init_variance(schedule, M);
  init.M = M;
  return init;
}

double gaussian_kl(const Vector& mu_q, const Eigen::MatrixXd& sigma_q, const InitDistribution& init) {
  const Eigen::Index d = mu_q.size();
  if (sigma_q.rows() != d || sigma_q.cols() != d || init.mu_p.size() != d)
    throw ShapeError("gaussian_kl: dimension mismatch");
  if (!(init.sigma_p2 > 0.0)) throw DomainError("gaussian_kl: sigma_p2 must be > 0");
  if (!sigma_q.isApprox(sigma_q.transpose(), 1e-12)) throw NumericalError("gaussian_kl: Sigma_q is not symmetric");
  Eigen::LLT<Eigen::MatrixXd> llt(sigma_q);
  if (llt.info() != Eigen::Success) throw NumericalError("gaussian_kl: Sigma_q is not positive definite");

  const Eigen::MatrixXd l = llt.matrixL();
  const double log_det_q = 2.0 * l.diagonal().array().log().sum();
  const double s2 = init.sigma_p2;
  const double dd = static_cast<double>(d);
  const double kl = 0.5 * ((init.mu_p - mu_q).squaredNorm() / s2 + dd * std::log(s2) + sigma_q.trace() / s2 -
                           log_det_q - dd);
  return std::max(kl, 0.0);
}

PerturbationGrid PerturbationGrid::standard(Eigen::Index flat_dim) {
  PerturbationGrid g;
  for (int k = 0; k < 9; ++k) {
    g.kappas.push_back(std::exp2((k - 4) / 4.0));
    g.shifts.push_back((k - 4) / 4.0);
  }
  // Alternating-sign direction so the shift is not aligned with the data mean.
  g.direction = Vector(flat_dim);
  for (Eigen::Index i = 0; i < flat_dim; ++i) g.direction(i) = (i % 2 == 0) ? 1.0 : -0.5;
  g.direction.normalize();
  return g;
}

FlatGaussian flat_marginal(const GaussianWorld& world, const NoiseSchedule& schedule, double M) {
  const FrameMoments m = marginal_moments_at(world, schedule, M);
  return {flatten(m.mean), full_covariance(m.frame_cov, world.dim)};
}

OptimalityReport verify_optimality(const DataMoments& moments, const Vector& mu_q, const Eigen::MatrixXd& sigma_q,
                                   const NoiseSchedule& schedule, double M, const PerturbationGrid& grid) {
  OptimalityReport report;
  report.optimum = optimal_init(moments, schedule, M);
  report.kl_optimum = gaussian_kl(mu_q, sigma_q, report.optimum);

  const double dd = static_cast<double>(mu_q.size());
  const double trace_form = (sigma_q.trace() + (report.optimum.mu_p - mu_q).squaredNorm()) / dd;
  report.variance_formula_error =
      std::abs(report.optimum.sigma_p2 - trace_form) / std::max(1.0, std::abs(trace_form));
  report.mean_formula_error =
      (report.optimum.mu_p - mu_q).lpNorm<Eigen::Infinity>() / std::max(1.0, mu_q.lpNorm<Eigen::Infinity>());

  report.min_margin = std::numeric_limits<double>::infinity();
  for (double kappa : grid.kappas) {
    for (double shift : grid.shifts) {
      InitDistribution cell = report.optimum;
      cell.mu_p += shift * grid.direction;
      cell.sigma_p2 *= kappa;
      const double kl = gaussian_kl(mu_q, sigma_q, cell);
      report.cells.push_back({kappa, shift, kl});
      if (kappa == 1.0 && shift == 0.0) continue;
      report.min_margin = std::min(report.min_margin, kl - report.kl_optimum);
    }
  }
  report.passed = report.min_margin > kOptimalityMargin && report.variance_formula_error <= kFormulaTolerance &&
                  report.mean_formula_error <= kFormulaTolerance;
  return report;
}

}  // namespace leaklab
