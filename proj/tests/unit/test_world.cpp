#include <doctest.h>

#include <cmath>
#include <numbers>

#include <Eigen/Dense>

#include "leaklab/denoiser.hpp"
#include "leaklab/diagnostics.hpp"
#include "leaklab/errors.hpp"
#include "leaklab/gaussian_world.hpp"

using namespace leaklab;

namespace {

GaussianWorld small_world(int frames = 3, int dim = 2) {
  GaussianWorld w;
  w.frames = frames;
  w.dim = dim;
  w.m0 = Vector::LinSpaced(dim, -0.5, 0.5);
  w.drift = Vector::Constant(dim, 0.3);
  w.s0 = 1.0;
  w.s_w = 0.6;
  return w;
}

// Posterior mean of the flattened video given frame 0 and xt, by dense Gaussian conditioning.
Vector brute_force_posterior(const GaussianWorld& w, const NoiseSchedule& s, const Video& xt, const Vector& y0,
                             double t) {
  const int n = w.frames, d = w.dim, D = n * d;
  Vector m(D);
  Eigen::MatrixXd Sigma = Eigen::MatrixXd::Zero(D, D);
  for (int i = 0; i < n; ++i)
    for (int k = 0; k < d; ++k) {
      m(i * d + k) = w.m0(k) + i * w.drift(k);
      for (int j = 0; j < n; ++j) Sigma(i * d + k, j * d + k) = w.s0 * w.s0 + std::min(i, j) * w.s_w * w.s_w;
    }
  const auto c = alpha_sigma(s, t);
  Eigen::MatrixXd A = Eigen::MatrixXd::Zero(d + D, D);
  A.topLeftCorner(d, d).setIdentity();
  A.bottomRows(D) = c.alpha * Eigen::MatrixXd::Identity(D, D);
  Eigen::MatrixXd R = Eigen::MatrixXd::Zero(d + D, d + D);
  R.bottomRightCorner(D, D) = c.sigma * c.sigma * Eigen::MatrixXd::Identity(D, D);
  Vector obs(d + D);
  obs << y0, flatten(xt);
  const Eigen::MatrixXd K = A * Sigma * A.transpose() + R;
  return m + Sigma * A.transpose() * K.ldlt().solve(obs - A * m);
}

}  // namespace

TEST_CASE("frame covariance examples") {
  GaussianWorld w = small_world(2, 1);
  w.s0 = 1.0;
  w.s_w = 1.0;
  const Eigen::MatrixXd C = prior_moments(w).frame_cov;
  CHECK(C(0, 0) == 1.0);
  CHECK(C(0, 1) == 1.0);
  CHECK(C(1, 1) == 2.0);
  CHECK(C.determinant() == doctest::Approx(1.0));

  GaussianWorld z = small_world(3, 1);
  z.s0 = 0.0;
  const Eigen::MatrixXd Cz = prior_moments(z).frame_cov;
  CHECK(Cz.row(0).isZero());
  CHECK(Cz.col(0).isZero());
}

TEST_CASE("near-deterministic walk follows the drift") {
  GaussianWorld w = small_world(5, 2);
  w.s0 = 0.0;
  w.s_w = 1e-8;
  Rng rng(1);
  const Video v = sample_video(w, rng);
  for (int i = 0; i < 5; ++i)
    for (int k = 0; k < 2; ++k) CHECK(v(i, k) == doctest::Approx(w.m0(k) + i * w.drift(k)).epsilon(1e-6));
}

TEST_CASE("Monte Carlo covariance within 4 standard errors") {
  const GaussianWorld w = small_world(3, 2);
  const Eigen::MatrixXd C = prior_moments(w).frame_cov;
  Rng rng(2);
  const int n = 100000;
  Eigen::MatrixXd sum = Eigen::MatrixXd::Zero(3, 3);
  Vector first = Vector::Zero(2);
  std::vector<Video> vs;
  vs.reserve(n);
  for (int s = 0; s < n; ++s) vs.push_back(sample_video(w, rng));
  Video mean = Video::Zero(3, 2);
  for (const auto& v : vs) mean += v;
  mean /= n;
  for (const auto& v : vs) {
    const Video c = v - mean;
    sum += c * c.transpose();
  }
  const Eigen::MatrixXd cov = sum / (2.0 * n);  // pooled over coordinates
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) {
      const double se = std::sqrt((C(i, i) * C(j, j) + C(i, j) * C(i, j)) / (2.0 * n));
      CHECK(std::abs(cov(i, j) - C(i, j)) < 4.0 * se);
    }
  for (int k = 0; k < 2; ++k) CHECK(std::abs(mean(0, k) - w.m0(k)) < 4.0 * w.s0 / std::sqrt(double(n)));
}

TEST_CASE("marginal moments at the endpoints") {
  const GaussianWorld w = small_world();
  const NoiseSchedule s = NoiseSchedule::vp();
  const auto p = prior_moments(w);
  const auto m0 = marginal_moments_at(w, s, 0.0);
  CHECK(m0.mean == p.mean);
  CHECK(m0.frame_cov.isApprox(p.frame_cov, 1e-15));
  const auto m1 = marginal_moments_at(w, s, 1.0);
  const double a = alpha_sigma(s, 1.0).alpha;
  CHECK(m1.mean.cwiseAbs().maxCoeff() <= a * p.mean.cwiseAbs().maxCoeff() + 1e-15);
  CHECK((m1.frame_cov - Eigen::MatrixXd::Identity(3, 3)).cwiseAbs().maxCoeff() <= a * a * p.frame_cov.maxCoeff() + 1e-12);
}

TEST_CASE("folded normal mean and expected motion") {
  CHECK(folded_normal_mean(0.0, 1.0) == doctest::Approx(std::sqrt(2.0 / std::numbers::pi)));
  CHECK(folded_normal_mean(5.0, 1e-9) == doctest::Approx(5.0));
  CHECK(folded_normal_mean(-5.0, 1e-9) == doctest::Approx(5.0));

  const GaussianWorld w = small_world(4, 3);
  Rng rng(4);
  double acc = 0.0;
  const int n = 40000;
  for (int i = 0; i < n; ++i) acc += motion_score(sample_video(w, rng));
  CHECK(acc / n == doctest::Approx(expected_motion_score(w)).epsilon(0.01));

  const GaussianWorld w4 = world_with_motion(w, 4.0);
  CHECK(expected_motion_score(w4) == doctest::Approx(4.0).epsilon(1e-9));
  CHECK_THROWS_AS(world_with_motion(w, 0.01), ConfigError);
}

TEST_CASE("exact denoiser equals brute-force Gaussian conditioning") {
  const GaussianWorld w = small_world(3, 2);
  for (const NoiseSchedule& s : {NoiseSchedule::vp(), NoiseSchedule::ve()}) {
    const ExactDenoiser den(w, s, true);
    Rng rng(9);
    for (double t : {0.05, 0.3, 0.8}) {
      const Video x0 = sample_video(w, rng);
      const Vector y0 = x0.row(0).transpose();
      const Video xt = perturb(s, x0, t, rng).xt;
      const Vector oracle = brute_force_posterior(w, s, xt, y0, t);
      const Video pred = den.predict_x0(xt, y0, t);
      CHECK((flatten(pred) - oracle).cwiseAbs().maxCoeff() < 1e-8);
      CHECK(pred.row(0).transpose() == y0);
      CHECK((one_step_from_eps(s, xt, den.predict_eps(xt, y0, t), t) - pred).cwiseAbs().maxCoeff() < 1e-10);
    }
  }
}

TEST_CASE("exact denoiser limits") {
  const GaussianWorld w = small_world(3, 2);
  const NoiseSchedule s = NoiseSchedule::vp();
  const ExactDenoiser den(w, s, true);
  Rng rng(10);
  const Video x0 = sample_video(w, rng);
  const Vector y0 = x0.row(0).transpose();
  const Video xt_small = perturb(s, x0, 1e-4, rng).xt;
  CHECK((den.predict_x0(xt_small, y0, 1e-4) - xt_small).bottomRows(2).cwiseAbs().maxCoeff() < 1e-3);
  const Video xt1 = perturb(s, x0, 1.0, rng).xt;
  const Video cm = conditional_prior_moments(w, y0).mean;
  CHECK((den.predict_x0(xt1, y0, 1.0) - cm).cwiseAbs().maxCoeff() < 0.05);  // alpha_1 ~ 6.6e-3
}

TEST_CASE("exact denoiser satisfies the posterior-mean property") {
  const GaussianWorld w = small_world(3, 1);
  const NoiseSchedule s = NoiseSchedule::vp();
  const ExactDenoiser den(w, s, true);
  Rng rng(12);
  const double t = 0.5;
  constexpr int kBins = 5;
  std::vector<double> residual(kBins, 0.0), count(kBins, 0.0), sq(kBins, 0.0);
  for (int i = 0; i < 10000; ++i) {
    const Video x0 = sample_video(w, rng);
    const Vector y0 = x0.row(0).transpose();
    const Video xt = perturb(s, x0, t, rng).xt;
    const double r = (x0 - den.predict_x0(xt, y0, t))(2, 0);
    const int b = std::clamp(static_cast<int>((xt(2, 0) + 2.5) / 1.0), 0, kBins - 1);
    residual[b] += r;
    sq[b] += r * r;
    count[b] += 1.0;
  }
  for (int b = 0; b < kBins; ++b) {
    if (count[b] < 100) continue;
    const double mean = residual[b] / count[b];
    const double se = std::sqrt(sq[b] / count[b] / count[b]);
    CHECK(std::abs(mean) < 4.0 * se);
  }
}

TEST_CASE("leaky denoiser") {
  const GaussianWorld w = small_world(4, 2);
  const NoiseSchedule s = NoiseSchedule::vp();
  const ExactDenoiser exact(w, s, true);
  Rng rng(13);
  const Video x0 = sample_video(w, rng);
  const Vector y0 = x0.row(0).transpose();
  const Video xt = perturb(s, x0, 0.6, rng).xt;
  CHECK(LeakyDenoiser(w, s, 0.0, 4.0).predict_x0(xt, y0, 0.6) == exact.predict_x0(xt, y0, 0.6));
  const Video full = LeakyDenoiser(w, s, 1.0, 4.0).predict_x0(xt, y0, 1.0);
  CHECK((full - broadcast_frame(y0, 4)).cwiseAbs().maxCoeff() < 1e-12);
  CHECK(motion_score(full) < 1e-12);

  const LeakyDenoiser leaky(w, s, 0.8, 4.0);
  const Video e = Rng(14).normal_matrix(4, 2);
  CHECK(motion_score(one_step_prediction_with(leaky, x0, y0, 0.95, e)) <
        motion_score(one_step_prediction_with(leaky, x0, y0, 0.3, e)));
}

TEST_CASE("eps conversion guards t=0") {
  const NoiseSchedule s = NoiseSchedule::vp();
  const Video x = Video::Ones(2, 2);
  CHECK_THROWS_AS(one_step_from_eps(s, x, x, 0.0), DomainError);
  CHECK_THROWS_AS(as_eps_prediction(s, x, x, 0.0), DomainError);
  Rng rng(15);
  const Video x0 = Video::Random(3, 2);
  const auto p = perturb(s, x0, 0.7, rng);
  CHECK((one_step_from_eps(s, p.xt, p.eps, 0.7) - x0).cwiseAbs().maxCoeff() < 1e-12);
}
