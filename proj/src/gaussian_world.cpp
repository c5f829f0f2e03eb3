#include "leaklab/gaussian_world.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "leaklab/errors.hpp"

namespace leaklab {

void GaussianWorld::validate() const {
  if (frames < 2) throw ConfigError("world: frames must be >= 2");
  if (dim < 1) throw ConfigError("world: dim must be >= 1");
  if (m0.size() != dim || drift.size() != dim) throw ConfigError("world: m0 and drift must have length dim");
  if (!m0.allFinite() || !drift.allFinite()) throw ConfigError("world: m0 and drift must be finite");
  if (!(s0 >= 0.0) || !std::isfinite(s0)) throw ConfigError("world: s0 must be >= 0");
  if (!(s_w > 0.0) || !std::isfinite(s_w)) throw ConfigError("world: s_w must be > 0");
}

bool GaussianWorld::operator==(const GaussianWorld& o) const {
  return frames == o.frames && dim == o.dim && m0 == o.m0 && s0 == o.s0 && drift == o.drift && s_w == o.s_w &&
         random_cond_frame == o.random_cond_frame;
}

Video sample_video(const GaussianWorld& world, Rng& rng) {
  Video v(world.frames, world.dim);
  for (int k = 0; k < world.dim; ++k) v(0, k) = world.m0(k) + world.s0 * rng.normal();
  for (int i = 1; i < world.frames; ++i)
    for (int k = 0; k < world.dim; ++k) v(i, k) = v(i - 1, k) + world.drift(k) + world.s_w * rng.normal();
  return v;
}

namespace {

Video walk_mean(const GaussianWorld& world, const Vector& start) {
  Video mean(world.frames, world.dim);
  for (int i = 0; i < world.frames; ++i) mean.row(i) = (start + i * world.drift).transpose();
  return mean;
}

Eigen::MatrixXd walk_cov(int frames, double s0, double s_w) {
  Eigen::MatrixXd c(frames, frames);
  for (int i = 0; i < frames; ++i)
    for (int j = 0; j < frames; ++j) c(i, j) = s0 * s0 + std::min(i, j) * s_w * s_w;
  return c;
}

}  // namespace

FrameMoments prior_moments(const GaussianWorld& world) {
  return {walk_mean(world, world.m0), walk_cov(world.frames, world.s0, world.s_w)};
}

FrameMoments conditional_prior_moments(const GaussianWorld& world, const Vector& y0) {
  if (y0.size() != world.dim) throw ShapeError("conditional moments: y0 must have length dim");
  return {walk_mean(world, y0), walk_cov(world.frames, 0.0, world.s_w)};
}

FrameMoments marginal_moments_at(const GaussianWorld& world, const NoiseSchedule& schedule, double t) {
  const auto [alpha, sigma] = alpha_sigma(schedule, t);
  FrameMoments prior = prior_moments(world);
  prior.mean *= alpha;
  prior.frame_cov = alpha * alpha * prior.frame_cov +
                    sigma * sigma * Eigen::MatrixXd::Identity(world.frames, world.frames);
  return prior;
}

Eigen::MatrixXd full_covariance(const Eigen::MatrixXd& frame_cov, int dim) {
  const Eigen::Index n = frame_cov.rows();
  Eigen::MatrixXd full = Eigen::MatrixXd::Zero(n * dim, n * dim);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < n; ++j)
      for (int k = 0; k < dim; ++k) full(i * dim + k, j * dim + k) = frame_cov(i, j);
  return full;
}

double folded_normal_mean(double mu, double sigma) {
  if (sigma == 0.0) return std::abs(mu);
  const double r = mu / sigma;
  return sigma * std::sqrt(2.0 / std::numbers::pi) * std::exp(-0.5 * r * r) + mu * std::erf(r / std::numbers::sqrt2);
}

double expected_motion_score(const GaussianWorld& world) {
  double per_pair = 0.0;
  for (int k = 0; k < world.dim; ++k) per_pair += folded_normal_mean(world.drift(k), world.s_w);
  return (world.frames - 1) * per_pair / world.dim;
}

GaussianWorld world_with_motion(const GaussianWorld& world, double target_motion) {
  GaussianWorld w = world;
  w.s_w = 0.0;
  const double floor = expected_motion_score(w);
  if (!(target_motion > floor))
    throw ConfigError("motion target must exceed the drift-only motion score of the world");
  // expected motion is increasing in s_w; bracket then bisect.
  double lo = 0.0, hi = 1.0;
  w.s_w = hi;
  while (expected_motion_score(w) < target_motion) {
    hi *= 2.0;
    w.s_w = hi;
  }
  for (int it = 0; it < 200 && hi - lo > 1e-15 * hi; ++it) {
    const double mid = 0.5 * (lo + hi);
    w.s_w = mid;
    if (expected_motion_score(w) < target_motion)
      lo = mid;
    else
      hi = mid;
  }
  w.s_w = 0.5 * (lo + hi);
  return w;
}

}  // namespace leaklab
