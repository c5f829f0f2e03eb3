#pragma once

#include "leaklab/random.hpp"
#include "leaklab/schedule.hpp"
#include "leaklab/video.hpp"

namespace leaklab {

/// Gaussian random-walk videos.
///
/// frame_1 ~ N(m0, s0^2 I), frame_{i+1} = frame_i + drift + N(0, s_w^2 I). Coordinates are
/// independent, so the prior covariance is C (x) I_d with C_ij = s0^2 + min(i-1, j-1) s_w^2.
struct GaussianWorld {
  int frames = 8;
  int dim = 4;
  Vector m0 = Vector::Zero(4);
  double s0 = 1.0;
  Vector drift = Vector::Constant(4, 0.2);
  double s_w = 0.5;
  /// Pick the conditioning frame uniformly at random during training instead of frame 1.
  bool random_cond_frame = false;

  void validate() const;
  bool operator==(const GaussianWorld& o) const;

  Eigen::Index flat_dim() const { return static_cast<Eigen::Index>(frames) * dim; }
};

/// Mean (as an N x d video) and the N x N frame covariance factor.
struct FrameMoments {
  Video mean;
  Eigen::MatrixXd frame_cov;
};

Video sample_video(const GaussianWorld& world, Rng& rng);

FrameMoments prior_moments(const GaussianWorld& world);

/// Moments of frames 1..N given frame 1 = y0.
FrameMoments conditional_prior_moments(const GaussianWorld& world, const Vector& y0);

/// Moments of X_t: mean alpha_t * prior mean, factor alpha_t^2 C + sigma_t^2 I_N.
FrameMoments marginal_moments_at(const GaussianWorld& world, const NoiseSchedule& schedule, double t);

/// Expands a frame factor C to the full (N d) x (N d) covariance C (x) I_d in flattened row-major order.
Eigen::MatrixXd full_covariance(const Eigen::MatrixXd& frame_cov, int dim);

/// Expected motion score of a ground-truth video: (N - 1) * mean_k E|Z_k|, Z_k ~ N(drift_k, s_w^2).
double expected_motion_score(const GaussianWorld& world);

/// Mean of |Z| for Z ~ N(mu, sigma^2).
double folded_normal_mean(double mu, double sigma);

/// Returns a copy of the world with s_w chosen so that expected_motion_score hits the target.
GaussianWorld world_with_motion(const GaussianWorld& world, double target_motion);

}  // namespace leaklab
