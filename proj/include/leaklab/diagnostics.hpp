#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "leaklab/analytic_init.hpp"
#include "leaklab/denoiser.hpp"
#include "leaklab/gaussian_world.hpp"
#include "leaklab/sampler.hpp"

namespace leaklab {

/// Sum over adjacent frame pairs of the mean absolute per-coordinate difference.
/// This is the L1 stand-in for "flow magnitude averaged spatially, summed over frames".
double motion_score(const Video& video);

double mean_motion(const std::vector<Video>& videos);

/// X_hat_{t->0} = (x_t - sigma_t eps_theta(x_t, y0, t)) / alpha_t for a given forward noise draw.
Video one_step_prediction_with(const Denoiser& denoiser, const Video& x0, const Vector& y0, double t,
                               const Video& eps);

/// Draws the forward noise from rng, then applies one_step_prediction_with.
Video one_step_prediction(const Denoiser& denoiser, const Video& x0, const Vector& y0, double t, Rng& rng);

struct LeakageCurve {
  std::vector<double> t;
  /// mean motion(X_hat_{t->0}) / mean motion(X_0) over the evaluation set.
  std::vector<double> ratio;

  double at(double time) const;
  bool operator==(const LeakageCurve&) const = default;
};

/// Evaluation items are paired across denoisers: item j uses forward noise from derive_seed(seed, j)
/// at every grid point. The conditioning frame is frame 1 of each item.
LeakageCurve leakage_curve(const Denoiser& denoiser, const std::vector<Video>& eval_set,
                           const std::vector<double>& t_grid, std::uint64_t seed);

/// Null calibration: eps-prediction equals the drawn noise, so the ratio is 1 up to rounding.
LeakageCurve leakage_curve_oracle(const NoiseSchedule& schedule, const std::vector<Video>& eval_set,
                                  const std::vector<double>& t_grid, std::uint64_t seed);

/// Sample mean video and the N x N frame covariance pooled over coordinates (divisor n).
struct SampleMoments {
  Video mean;
  Eigen::MatrixXd frame_cov;
};
SampleMoments sample_moments(const std::vector<Video>& videos);

struct MomentError {
  /// RMS of the mean error, divided by the RMS true frame standard deviation.
  double mean_error = 0.0;
  /// Frobenius norm of the frame-covariance error relative to the true frame covariance.
  double cov_error = 0.0;
  double total() const { return mean_error + cov_error; }
};

/// Error of generated samples against the conditional moments of the world given frame 1 = y0.
MomentError conditional_moment_error(const std::vector<Video>& samples, const GaussianWorld& world,
                                     const Vector& y0);

struct SweepRow {
  double input_ms = 0.0;
  double output_ms_mean = 0.0;
  double output_ms_std = 0.0;
  /// (output - input) / input.
  double error = 0.0;
};

struct SweepSettings {
  SamplerConfig sampler;
  int samples = 500;
  std::uint64_t seed = 0;
};

/// Generates `samples` chains conditioned on first frames of `world` videos and compares the mean
/// output motion against `expected`.
SweepRow motion_row(const Denoiser& denoiser, const GaussianWorld& world, double expected,
                    const SweepSettings& settings);

using DenoiserFactory = std::function<std::unique_ptr<Denoiser>(const GaussianWorld&)>;

/// For world-defined denoisers (exact, leaky): each target picks a world whose ground-truth mean
/// motion equals the target, the denoiser is rebuilt for it, and the expected motion is the target.
std::vector<SweepRow> motion_sweep(const DenoiserFactory& factory, const GaussianWorld& world,
                                   const std::vector<double>& targets, const SweepSettings& settings);

class MlpDenoiser;

/// Motion-conditioned checkpoint: the target is fed to the network and is the expected motion.
/// Throws ConfigError when the checkpoint was trained without motion conditioning.
std::vector<SweepRow> motion_sweep_conditioned(MlpDenoiser& denoiser, const GaussianWorld& world,
                                               const std::vector<double>& targets, const SweepSettings& settings);

struct AblationRow {
  double M = 1.0;
  InitKind init = InitKind::Standard;
  double kl = 0.0;
  double mean_ms = 0.0;
  MomentError moment_error;
};

struct AblationSettings {
  std::vector<double> M_grid{1.0, 0.96, 0.92, 0.88, 0.84, 0.8};
  int steps = 50;
  int samples = 2000;
  Vector y0;
  std::uint64_t seed = 0;
};

/// For every (M, init) cell: KL(q_M || init) against the exact marginal, mean output motion and the
/// conditional-moment error of generated samples. Analytic inits are built from `moments`.
/// Standard and Analytic chains share seeds.
std::vector<AblationRow> init_ablation(const GaussianWorld& world, const NoiseSchedule& schedule,
                                       const DataMoments& moments, const Denoiser& denoiser,
                                       const AblationSettings& settings);


}  // namespace leaklab
