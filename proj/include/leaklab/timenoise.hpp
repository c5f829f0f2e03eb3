#pragma once

#include "leaklab/random.hpp"
#include "leaklab/video.hpp"

namespace leaklab {

enum class CorruptionVariant {
  Additive,       ///< y_s = y_0 + beta_s eps
  Interpolation,  ///< y_s = (1 - beta_s) y_0 + beta_s eps; requires beta_m = 1
};

/// Time-dependent logit-normal distribution over conditioning noise levels.
///
/// logit(beta_s / beta_m) ~ Normal(mu(t), 1) with center mu(t) = 2 t^a - 1, so that high
/// noise levels are favoured at large t and the center moves from -1 at t = 0 to 1 at t = 1.
struct TimeNoiseParams {
  double beta_m = 100.0;
  double a = 5.0;
  CorruptionVariant variant = CorruptionVariant::Additive;

  void validate() const;
  bool operator==(const TimeNoiseParams&) const = default;
};

/// A conditioning frame together with the noise level that produced it (0 for clean).
struct Condition {
  Vector y;
  double noise_level_used = 0.0;
};

double mu_of_t(const TimeNoiseParams& params, double t);

/// Density of beta_s at time t on the open interval (0, beta_m).
double pdf(const TimeNoiseParams& params, double t, double beta_s);

/// CDF of beta_s at time t, closed form through the normal CDF of the logit.
double cdf(const TimeNoiseParams& params, double t, double beta_s);

double sample_beta(const TimeNoiseParams& params, double t, Rng& rng);

/// Maps a standard-normal draw z to beta_m * sigmoid(mu(t) + z).
double beta_from_standard_normal(const TimeNoiseParams& params, double t, double z);

Condition corrupt(const TimeNoiseParams& params, const Vector& y0, double t, Rng& rng);

/// Applies the corruption operator for a given noise level and noise vector.
Condition corrupt_with(CorruptionVariant variant, const Vector& y0, double beta_s, const Vector& eps);

/// Deterministic baseline level beta_m (mu(t) + 1) / 2.
double constant_beta(const TimeNoiseParams& params, double t);

double logit(double p);
double sigmoid(double x);

}  // namespace leaklab
