#include "leaklab/schedule.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "leaklab/errors.hpp"

namespace leaklab {

NoiseSchedule NoiseSchedule::vp(double beta_min, double beta_max) {
  NoiseSchedule s;
  s.kind = ScheduleKind::VP;
  s.beta_min = beta_min;
  s.beta_max = beta_max;
  s.validate();
  return s;
}

NoiseSchedule NoiseSchedule::ve(double sigma_min, double sigma_max) {
  NoiseSchedule s;
  s.kind = ScheduleKind::VE;
  s.sigma_min = sigma_min;
  s.sigma_max = sigma_max;
  s.validate();
  return s;
}

void NoiseSchedule::validate() const {
  if (kind == ScheduleKind::VP) {
    if (!(beta_min >= 0.0) || !(beta_max > beta_min) || !std::isfinite(beta_max))
      throw ConfigError("VP schedule requires 0 <= beta_min < beta_max");
    if (alpha_sigma(*this, 1.0).alpha >= 1e-2)
      throw ConfigError("VP schedule must reach alpha_1 < 1e-2; increase beta_max");
  } else {
    if (!(sigma_min > 0.0) || !(sigma_max > sigma_min) || !std::isfinite(sigma_max))
      throw ConfigError("VE schedule requires 0 < sigma_min < sigma_max");
  }
}

void check_time(double t) {
  if (!(t >= 0.0 && t <= 1.0)) throw DomainError("time must lie in [0, 1], got " + std::to_string(t));
}

double vp_rate(const NoiseSchedule& schedule, double t) {
  if (schedule.kind != ScheduleKind::VP) return 0.0;
  return schedule.beta_min + t * (schedule.beta_max - schedule.beta_min);
}

Coefficients alpha_sigma(const NoiseSchedule& schedule, double t) {
  check_time(t);
  if (schedule.kind == ScheduleKind::VP) {
    const double log_alpha = -0.25 * t * t * (schedule.beta_max - schedule.beta_min) - 0.5 * t * schedule.beta_min;
    const double alpha = std::exp(log_alpha);
    // sqrt(1 - alpha^2) via expm1 keeps precision near t = 0.
    const double sigma = std::sqrt(-std::expm1(2.0 * log_alpha));
    return {alpha, sigma};
  }
  const double sigma = schedule.sigma_min * std::pow(schedule.sigma_max / schedule.sigma_min, t);
  return {1.0, sigma};
}

Video perturb_with(const NoiseSchedule& schedule, const Video& x0, double t, const Video& eps) {
  if (eps.rows() != x0.rows() || eps.cols() != x0.cols()) throw ShapeError("perturb: noise shape mismatch");
  const auto [alpha, sigma] = alpha_sigma(schedule, t);
  return alpha * x0 + sigma * eps;
}

Perturbed perturb(const NoiseSchedule& schedule, const Video& x0, double t, Rng& rng) {
  check_time(t);
  Video eps = rng.normal_matrix(x0.rows(), x0.cols());
  Video xt = perturb_with(schedule, x0, t, eps);
  return {std::move(xt), std::move(eps)};
}

double noise_ratio(const NoiseSchedule& schedule, double t) {
  const auto [alpha, sigma] = alpha_sigma(schedule, t);
  return sigma / alpha;
}

double time_for_noise_ratio(const NoiseSchedule& schedule, double ratio) {
  if (!(ratio >= 0.0)) throw DomainError("noise ratio must be non-negative");
  double t = 0.0;
  if (schedule.kind == ScheduleKind::VP) {
    // alpha = 1/sqrt(1+r^2)  =>  (bmax-bmin)/4 t^2 + bmin/2 t - log(1+r^2)/2 = 0.
    const double a = 0.25 * (schedule.beta_max - schedule.beta_min);
    const double b = 0.5 * schedule.beta_min;
    const double c = -0.5 * std::log1p(ratio * ratio);
    t = (-b + std::sqrt(b * b - 4.0 * a * c)) / (2.0 * a);
  } else {
    if (ratio <= schedule.sigma_min) return 0.0;
    t = std::log(ratio / schedule.sigma_min) / std::log(schedule.sigma_max / schedule.sigma_min);
  }
  return std::clamp(t, 0.0, 1.0);
}

double standard_init_variance(const NoiseSchedule& schedule, double t) {
  if (schedule.kind == ScheduleKind::VP) return 1.0;
  const double sigma = alpha_sigma(schedule, t).sigma;
  return sigma * sigma;
}

}  // namespace leaklab
