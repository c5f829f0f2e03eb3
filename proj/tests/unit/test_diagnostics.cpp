#include <doctest.h>

#include "leaklab/analytic_init.hpp"
#include "leaklab/denoiser.hpp"
#include "leaklab/diagnostics.hpp"
#include "leaklab/errors.hpp"
#include "leaklab/train.hpp"

using namespace leaklab;

namespace {

std::vector<Video> eval_set(const GaussianWorld& w, int n, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<Video> out;
  for (int i = 0; i < n; ++i) out.push_back(sample_video(w, rng));
  return out;
}

}  // namespace

TEST_CASE("motion score examples") {
  CHECK(motion_score(Video::Constant(5, 3, 2.0)) == 0.0);
  Video v(2, 1);
  v << 0.0, 3.0;
  CHECK(motion_score(v) == 3.0);
  const Video r = Rng(1).normal_matrix(6, 3);
  CHECK(motion_score(r.rowwise() + Eigen::RowVector3d(1.0, -2.0, 4.0)) == doctest::Approx(motion_score(r)));
  CHECK_THROWS_AS(motion_score(Video::Zero(1, 3)), ShapeError);
}

TEST_CASE("one-step prediction round-trips") {
  GaussianWorld w;
  const NoiseSchedule s = NoiseSchedule::vp();
  Rng rng(2);
  const Video x0 = sample_video(w, rng);
  const Vector y0 = x0.row(0).transpose();
  const Video eps = rng.normal_matrix(w.frames, w.dim);
  const OracleEpsDenoiser oracle(s, x0);
  CHECK((one_step_prediction_with(oracle, x0, y0, 0.7, eps) - x0).cwiseAbs().maxCoeff() < 1e-10);

  const ExactDenoiser exact(w, s, true);
  const Video xt = perturb_with(s, x0, 0.7, eps);
  CHECK((one_step_prediction_with(exact, x0, y0, 0.7, eps) - exact.predict_x0(xt, y0, 0.7)).cwiseAbs().maxCoeff() <
        1e-10);
  CHECK_THROWS_AS(one_step_prediction_with(exact, x0, y0, 0.0, eps), DomainError);

  const LeakyDenoiser full(w, s, 1.0, 4.0);
  CHECK(motion_score(one_step_prediction_with(full, x0, y0, 1.0, eps)) < 1e-12);
}

TEST_CASE("leakage curve null and signal") {
  GaussianWorld w;
  const NoiseSchedule s = NoiseSchedule::vp();
  const auto eval = eval_set(w, 64, 3);
  const std::vector<double> grid{0.1, 0.3, 0.6, 0.95};
  const LeakageCurve null = leakage_curve_oracle(s, eval, grid, 9);
  for (double r : null.ratio) CHECK(std::abs(r - 1.0) < 1e-10);

  const LeakageCurve leaky = leakage_curve(LeakyDenoiser(w, s, 0.8, 4.0), eval, grid, 9);
  CHECK(leaky.at(0.95) < leaky.at(0.3));
  CHECK(leaky == leakage_curve(LeakyDenoiser(w, s, 0.8, 4.0), eval, grid, 9));
  CHECK_THROWS(leaky.at(0.5));
}

TEST_CASE("exact conditional posterior-mean motion decreases in t") {
  GaussianWorld w;
  const NoiseSchedule s = NoiseSchedule::vp();
  // Beyond t ~ 0.7 alpha is below 0.1 and successive ratios differ by less than the Monte Carlo noise.
  const auto eval = eval_set(w, 2000, 4);
  const LeakageCurve c = leakage_curve(ExactDenoiser(w, s, true), eval, {0.1, 0.3, 0.5, 0.7}, 10);
  for (std::size_t i = 1; i < c.ratio.size(); ++i) CHECK(c.ratio[i] <= c.ratio[i - 1]);
}

TEST_CASE("moment error is small for world samples") {
  GaussianWorld w;
  const Vector y0 = Vector::Constant(4, 0.3);
  const auto cm = conditional_prior_moments(w, y0);
  Rng rng(5);
  std::vector<Video> vs;
  for (int i = 0; i < 4000; ++i) {
    Video v = sample_video(w, rng);
    const Vector shift = y0 - v.row(0).transpose();
    v.rowwise() += shift.transpose();
    vs.push_back(v);
  }
  const MomentError e = conditional_moment_error(vs, w, y0);
  CHECK(e.mean_error < 0.05);
  CHECK(e.cov_error < 0.05);
  CHECK((sample_moments(vs).mean - cm.mean).cwiseAbs().maxCoeff() < 0.1);
}

TEST_CASE("motion sweep: exact is calibrated, leaky undershoots") {
  GaussianWorld w;
  const NoiseSchedule s = NoiseSchedule::vp();
  SweepSettings settings;
  settings.sampler.steps = 200;
  settings.samples = 400;
  settings.seed = 6;
  const SweepRow exact = motion_row(ExactDenoiser(w, s, true), w, expected_motion_score(w), settings);
  CHECK(std::abs(exact.error) < 0.05);

  const auto rows = motion_sweep(
      [&](const GaussianWorld& ww) { return std::make_unique<LeakyDenoiser>(ww, s, 0.8, 4.0); }, w, {2.0, 3.0, 4.0},
      settings);
  REQUIRE(rows.size() == 3);
  for (const SweepRow& r : rows) CHECK(r.error < 0.0);
}

TEST_CASE("conditioned sweep requires a motion-conditioned checkpoint") {
  GaussianWorld w;
  TrainConfig c;
  c.steps = 0;
  c.hidden = 8;
  MlpDenoiser den(train(w, NoiseSchedule::vp(), c));
  CHECK_THROWS_AS(motion_sweep_conditioned(den, w, {2.0}, SweepSettings{}), ConfigError);
}

TEST_CASE("init ablation: KL ordering") {
  GaussianWorld w;
  const NoiseSchedule s = NoiseSchedule::vp();
  AblationSettings settings;
  settings.samples = 50;
  settings.steps = 10;
  settings.seed = 7;
  const auto rows = init_ablation(w, s, world_moments(w), LeakyDenoiser(w, s, 0.8, 4.0), settings);
  REQUIRE(rows.size() == 2 * settings.M_grid.size());
  double prev = -1.0;
  for (std::size_t i = 0; i < rows.size(); i += 2) {
    CHECK(rows[i].init == InitKind::Standard);
    CHECK(rows[i + 1].init == InitKind::Analytic);
    CHECK(rows[i].kl > prev);
    CHECK(rows[i + 1].kl <= rows[i].kl);
    prev = rows[i].kl;
  }
}
