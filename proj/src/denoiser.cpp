#include "leaklab/denoiser.hpp"

#include <cmath>

#include "leaklab/errors.hpp"

namespace leaklab {

Video one_step_from_eps(const NoiseSchedule& schedule, const Video& xt, const Video& eps_hat, double t) {
  if (!(t > 0.0)) throw DomainError("one-step prediction is undefined at t = 0");
  const auto [alpha, sigma] = alpha_sigma(schedule, t);
  return (xt - sigma * eps_hat) / alpha;
}

Video as_eps_prediction(const NoiseSchedule& schedule, const Video& xt, const Video& x0_hat, double t) {
  if (!(t > 0.0)) throw DomainError("eps-prediction is undefined at t = 0");
  const auto [alpha, sigma] = alpha_sigma(schedule, t);
  return (xt - alpha * x0_hat) / sigma;
}

ExactDenoiser::ExactDenoiser(GaussianWorld world, NoiseSchedule schedule, bool conditional)
    : Denoiser(schedule), world_(std::move(world)), conditional_(conditional) {
  world_.validate();
}

Video ExactDenoiser::predict_x0(const Video& xt, const Vector& y, double t) const {
  if (xt.rows() != world_.frames || xt.cols() != world_.dim) throw ShapeError("exact denoiser: video shape mismatch");
  if (conditional_ && y.size() != world_.dim) throw ShapeError("exact conditional denoiser requires y of length dim");
  const auto [alpha, sigma] = alpha_sigma(schedule_, t);
  const FrameMoments m = conditional_ ? conditional_prior_moments(world_, y) : prior_moments(world_);

  Eigen::MatrixXd system = alpha * alpha * m.frame_cov;
  system.diagonal().array() += sigma * sigma + kJitter;
  Eigen::LLT<Eigen::MatrixXd> llt(system);
  if (llt.info() != Eigen::Success) throw NumericalError("exact denoiser: posterior system is not positive definite");
  const Eigen::MatrixXd w = llt.solve(xt - alpha * m.mean);
  return m.mean + alpha * m.frame_cov * w;
}

Video ExactDenoiser::predict_eps(const Video& xt, const Vector& y, double t) const {
  return as_eps_prediction(schedule_, xt, predict_x0(xt, y, t), t);
}

LeakyDenoiser::LeakyDenoiser(GaussianWorld world, NoiseSchedule schedule, double lambda_max, double power)
    : Denoiser(schedule), exact_(std::move(world), schedule, true), lambda_max_(lambda_max), power_(power) {
  if (!(lambda_max >= 0.0 && lambda_max <= 1.0)) throw ConfigError("leaky denoiser: lambda_max must lie in [0, 1]");
  if (!(power > 0.0)) throw ConfigError("leaky denoiser: power must be > 0");
}

double LeakyDenoiser::lambda(double t) const { return lambda_max_ * std::pow(t, power_); }

Video LeakyDenoiser::predict_x0(const Video& xt, const Vector& y, double t) const {
  const double lam = lambda(t);
  return (1.0 - lam) * exact_.predict_x0(xt, y, t) + lam * broadcast_frame(y, xt.rows());
}

Video LeakyDenoiser::predict_eps(const Video& xt, const Vector& y, double t) const {
  return as_eps_prediction(schedule_, xt, predict_x0(xt, y, t), t);
}

Video OracleEpsDenoiser::predict_eps(const Video& xt, const Vector&, double t) const {
  return as_eps_prediction(schedule_, xt, x0_, t);
}

Video OracleEpsDenoiser::predict_x0(const Video& xt, const Vector& y, double t) const {
  return one_step_from_eps(schedule_, xt, predict_eps(xt, y, t), t);
}

}  // namespace leaklab
