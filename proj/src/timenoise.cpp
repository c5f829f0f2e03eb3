#include "leaklab/timenoise.hpp"

#include <cmath>
#include <numbers>

#include "leaklab/errors.hpp"
#include "leaklab/schedule.hpp"

namespace leaklab {

void TimeNoiseParams::validate() const {
  if (!(beta_m > 0.0) || !std::isfinite(beta_m)) throw ConfigError("timenoise: beta_m must be > 0");
  if (!(a > 0.0) || !std::isfinite(a)) throw ConfigError("timenoise: a must be > 0");
  if (variant == CorruptionVariant::Interpolation && beta_m != 1.0)
    throw ConfigError("timenoise: interpolation variant requires beta_m = 1");
}

double logit(double p) { return std::log(p) - std::log1p(-p); }

double sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

double mu_of_t(const TimeNoiseParams& params, double t) {
  check_time(t);
  return 2.0 * std::pow(t, params.a) - 1.0;
}

double pdf(const TimeNoiseParams& params, double t, double beta_s) {
  if (!(beta_s > 0.0 && beta_s < params.beta_m))
    throw DomainError("timenoise pdf: beta_s must lie in the open interval (0, beta_m)");
  const double z = logit(beta_s / params.beta_m) - mu_of_t(params, t);
  return params.beta_m / std::sqrt(2.0 * std::numbers::pi) / (beta_s * (params.beta_m - beta_s)) *
         std::exp(-0.5 * z * z);
}

double cdf(const TimeNoiseParams& params, double t, double beta_s) {
  if (beta_s <= 0.0) return 0.0;
  if (beta_s >= params.beta_m) return 1.0;
  const double z = logit(beta_s / params.beta_m) - mu_of_t(params, t);
  return 0.5 * std::erfc(-z / std::numbers::sqrt2);
}

double beta_from_standard_normal(const TimeNoiseParams& params, double t, double z) {
  return params.beta_m * sigmoid(mu_of_t(params, t) + z);
}

double sample_beta(const TimeNoiseParams& params, double t, Rng& rng) {
  check_time(t);
  return beta_from_standard_normal(params, t, rng.normal());
}

Condition corrupt_with(CorruptionVariant variant, const Vector& y0, double beta_s, const Vector& eps) {
  if (eps.size() != y0.size()) throw ShapeError("corrupt: noise shape mismatch");
  Condition c;
  c.noise_level_used = beta_s;
  if (variant == CorruptionVariant::Additive)
    c.y = y0 + beta_s * eps;
  else
    c.y = (1.0 - beta_s) * y0 + beta_s * eps;
  return c;
}

Condition corrupt(const TimeNoiseParams& params, const Vector& y0, double t, Rng& rng) {
  const double beta_s = sample_beta(params, t, rng);
  return corrupt_with(params.variant, y0, beta_s, rng.normal_vector(y0.size()));
}

double constant_beta(const TimeNoiseParams& params, double t) {
  return params.beta_m * (mu_of_t(params, t) + 1.0) / 2.0;
}

}  // namespace leaklab
