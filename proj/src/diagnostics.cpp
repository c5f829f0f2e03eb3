#include "leaklab/diagnostics.hpp"

#include <algorithm>
#include <cmath>

#include "leaklab/errors.hpp"
#include "leaklab/train.hpp"

namespace leaklab {

double motion_score(const Video& video) {
  if (video.rows() < 2) throw ShapeError("motion score needs at least 2 frames");
  const Eigen::Index n = video.rows();
  return (video.bottomRows(n - 1) - video.topRows(n - 1)).cwiseAbs().sum() / static_cast<double>(video.cols());
}

double mean_motion(const std::vector<Video>& videos) {
  double s = 0.0;
  for (const Video& v : videos) s += motion_score(v);
  return videos.empty() ? 0.0 : s / static_cast<double>(videos.size());
}

Video one_step_prediction_with(const Denoiser& denoiser, const Video& x0, const Vector& y0, double t,
                               const Video& eps) {
  if (!(t > 0.0)) throw DomainError("one-step prediction requires t > 0");
  const Video xt = perturb_with(denoiser.schedule(), x0, t, eps);
  return one_step_from_eps(denoiser.schedule(), xt, denoiser.predict_eps(xt, y0, t), t);
}

Video one_step_prediction(const Denoiser& denoiser, const Video& x0, const Vector& y0, double t, Rng& rng) {
  if (!(t > 0.0)) throw DomainError("one-step prediction requires t > 0");
  return one_step_prediction_with(denoiser, x0, y0, t, rng.normal_matrix(x0.rows(), x0.cols()));
}

double LeakageCurve::at(double time) const {
  for (std::size_t i = 0; i < t.size(); ++i)
    if (std::abs(t[i] - time) < 1e-12) return ratio[i];
  throw DomainError("leakage curve has no grid point at t = " + std::to_string(time));
}

namespace {

template <typename DenoiserFor>
LeakageCurve leakage_curve_impl(DenoiserFor&& denoiser_for, const std::vector<Video>& eval_set,
                                const std::vector<double>& t_grid, std::uint64_t seed) {
  if (eval_set.empty()) throw InsufficientDataError("leakage curve needs a nonempty evaluation set");
  std::vector<Video> eps;
  eps.reserve(eval_set.size());
  double gt_motion = 0.0;
  for (std::size_t j = 0; j < eval_set.size(); ++j) {
    Rng rng(derive_seed(seed, j));
    eps.push_back(rng.normal_matrix(eval_set[j].rows(), eval_set[j].cols()));
    gt_motion += motion_score(eval_set[j]);
  }

  LeakageCurve curve;
  for (double t : t_grid) {
    double pred_motion = 0.0;
    for (std::size_t j = 0; j < eval_set.size(); ++j) {
      const Vector y0 = eval_set[j].row(0).transpose();
      pred_motion += motion_score(one_step_prediction_with(denoiser_for(j), eval_set[j], y0, t, eps[j]));
    }
    curve.t.push_back(t);
    curve.ratio.push_back(pred_motion / gt_motion);
  }
  return curve;
}

}  // namespace

LeakageCurve leakage_curve(const Denoiser& denoiser, const std::vector<Video>& eval_set,
                           const std::vector<double>& t_grid, std::uint64_t seed) {
  return leakage_curve_impl([&](std::size_t) -> const Denoiser& { return denoiser; }, eval_set, t_grid, seed);
}

LeakageCurve leakage_curve_oracle(const NoiseSchedule& schedule, const std::vector<Video>& eval_set,
                                  const std::vector<double>& t_grid, std::uint64_t seed) {
  std::vector<OracleEpsDenoiser> oracles;
  oracles.reserve(eval_set.size());
  for (const Video& v : eval_set) oracles.emplace_back(schedule, v);
  return leakage_curve_impl([&](std::size_t j) -> const Denoiser& { return oracles[j]; }, eval_set, t_grid, seed);
}

SampleMoments sample_moments(const std::vector<Video>& videos) {
  if (videos.size() < 2) throw InsufficientDataError("sample moments need at least 2 videos");
  const Eigen::Index n = videos.front().rows(), d = videos.front().cols();
  SampleMoments m{Video::Zero(n, d), Eigen::MatrixXd::Zero(n, n)};
  for (const Video& v : videos) m.mean += v;
  m.mean /= static_cast<double>(videos.size());
  for (const Video& v : videos) {
    const Video c = v - m.mean;
    m.frame_cov.noalias() += c * c.transpose();
  }
  m.frame_cov /= static_cast<double>(videos.size()) * static_cast<double>(d);
  return m;
}

MomentError conditional_moment_error(const std::vector<Video>& samples, const GaussianWorld& world,
                                     const Vector& y0) {
  const SampleMoments got = sample_moments(samples);
  const FrameMoments want = conditional_prior_moments(world, y0);
  MomentError e;
  const double mean_rms = std::sqrt((got.mean - want.mean).squaredNorm() / static_cast<double>(want.mean.size()));
  const double std_rms = std::sqrt(want.frame_cov.trace() / static_cast<double>(world.frames));
  e.mean_error = mean_rms / std_rms;
  e.cov_error = (got.frame_cov - want.frame_cov).norm() / want.frame_cov.norm();
  return e;
}

SweepRow motion_row(const Denoiser& denoiser, const GaussianWorld& world, double expected,
                    const SweepSettings& settings) {
  std::vector<Vector> y0s;
  Rng data_rng(derive_seed(settings.seed, 0xC0FFEE));
  for (int j = 0; j < settings.samples; ++j) y0s.push_back(sample_video(world, data_rng).row(0).transpose());
  const std::vector<Video> out = sample_chains(denoiser, y0s, world.frames, settings.sampler, settings.seed);

  SweepRow row;
  row.input_ms = expected;
  double s = 0.0, s2 = 0.0;
  for (const Video& v : out) {
    const double m = motion_score(v);
    s += m;
    s2 += m * m;
  }
  const double n = static_cast<double>(out.size());
  row.output_ms_mean = s / n;
  row.output_ms_std = std::sqrt(std::max(0.0, s2 / n - row.output_ms_mean * row.output_ms_mean));
  row.error = (row.output_ms_mean - expected) / expected;
  return row;
}

std::vector<SweepRow> motion_sweep(const DenoiserFactory& factory, const GaussianWorld& world,
                                   const std::vector<double>& targets, const SweepSettings& settings) {
  std::vector<SweepRow> rows;
  for (double target : targets) {
    const GaussianWorld w = world_with_motion(world, target);
    const std::unique_ptr<Denoiser> denoiser = factory(w);
    rows.push_back(motion_row(*denoiser, w, target, settings));
  }
  return rows;
}

std::vector<SweepRow> motion_sweep_conditioned(MlpDenoiser& denoiser, const GaussianWorld& world,
                                               const std::vector<double>& targets, const SweepSettings& settings) {
  if (!denoiser.motion_conditioned())
    throw ConfigError("conditioned motion sweep requires a motion-conditioned checkpoint");
  std::vector<SweepRow> rows;
  for (double target : targets) {
    denoiser.set_motion_target(target);
    rows.push_back(motion_row(denoiser, world_with_motion(world, target), target, settings));
  }
  return rows;
}

std::vector<AblationRow> init_ablation(const GaussianWorld& world, const NoiseSchedule& schedule,
                                       const DataMoments& moments, const Denoiser& denoiser,
                                       const AblationSettings& settings) {
  const Vector y0 = settings.y0.size() == world.dim ? settings.y0 : world.m0;
  const std::vector<Vector> y0s(static_cast<std::size_t>(settings.samples), y0);
  std::vector<AblationRow> rows;
  for (double M : settings.M_grid) {
    const FlatGaussian q = flat_marginal(world, schedule, M);
    for (InitKind kind : {InitKind::Standard, InitKind::Analytic}) {
      SamplerConfig cfg;
      cfg.M = M;
      cfg.steps = settings.steps;
      cfg.init = kind;
      const InitDistribution init =
          kind == InitKind::Standard ? standard_init(schedule, M, world.flat_dim()) : optimal_init(moments, schedule, M);
      if (kind == InitKind::Analytic) cfg.analytic = init;

      const std::vector<Video> out = sample_chains(denoiser, y0s, world.frames, cfg, settings.seed);
      AblationRow row;
      row.M = M;
      row.init = kind;
      row.kl = gaussian_kl(q.mean, q.cov, init);
      row.mean_ms = mean_motion(out);
      row.moment_error = conditional_moment_error(out, world, y0);
      rows.push_back(row);
    }
  }
  return rows;
}

}  // namespace leaklab
