#pragma once

#include "leaklab/random.hpp"
#include "leaklab/video.hpp"

namespace leaklab {

enum class ScheduleKind { VP, VE };

/// Continuous-time forward process on t in [0,1]: x_t = alpha_t x_0 + sigma_t eps.
///
/// VP uses the linear-rate form alpha_t = exp(-t^2 (beta_max - beta_min)/4 - t beta_min/2),
/// sigma_t = sqrt(1 - alpha_t^2). VE keeps alpha_t = 1 and interpolates sigma geometrically
/// between sigma_min and sigma_max.
struct NoiseSchedule {
  ScheduleKind kind = ScheduleKind::VP;
  double beta_min = 0.1;
  double beta_max = 20.0;
  double sigma_min = 0.002;
  double sigma_max = 700.0;

  static NoiseSchedule vp(double beta_min = 0.1, double beta_max = 20.0);
  static NoiseSchedule ve(double sigma_min = 0.002, double sigma_max = 700.0);

  /// Throws ConfigError when the parameters violate the schedule invariants.
  void validate() const;

  bool operator==(const NoiseSchedule&) const = default;
};

struct Coefficients {
  double alpha;
  double sigma;
};

Coefficients alpha_sigma(const NoiseSchedule& schedule, double t);

/// Linear VP rate beta(t); zero for VE. Exposed for quadrature checks.
double vp_rate(const NoiseSchedule& schedule, double t);

struct Perturbed {
  Video xt;
  Video eps;
};

Perturbed perturb(const NoiseSchedule& schedule, const Video& x0, double t, Rng& rng);

/// Applies the forward kernel with a caller-supplied noise draw.
Video perturb_with(const NoiseSchedule& schedule, const Video& x0, double t, const Video& eps);

/// Noise-to-signal ratio sigma_t / alpha_t. This is the EDM noise level for either kind.
double noise_ratio(const NoiseSchedule& schedule, double t);

/// Inverse of noise_ratio, clamped to [0,1].
double time_for_noise_ratio(const NoiseSchedule& schedule, double ratio);

/// The variance of the standard initial distribution at time t: 1 for VP, sigma_t^2 for VE.
double standard_init_variance(const NoiseSchedule& schedule, double t);

void check_time(double t);

}  // namespace leaklab
