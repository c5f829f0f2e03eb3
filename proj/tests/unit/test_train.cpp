#include <doctest.h>

#include <algorithm>
#include <vector>

#include "../support/gradcheck.hpp"
#include "leaklab/errors.hpp"
#include "leaklab/train.hpp"

using namespace leaklab;

namespace {

GaussianWorld tiny_world() {
  GaussianWorld w;
  w.frames = 3;
  w.dim = 2;
  w.m0 = Vector::Zero(2);
  w.drift = Vector::Constant(2, 0.2);
  return w;
}

TrainConfig tiny_config(TrainMode mode) {
  TrainConfig c;
  c.mode = mode;
  c.hidden = 15;
  c.batch_size = 8;
  c.eval_batch = 16;
  c.steps = 30;
  c.seed = 5;
  return c;
}

}  // namespace

TEST_CASE("MLP: zero parameters give zero output, shapes are checked") {
  const Mlp mlp({5, 7, 3});
  CHECK(mlp.shape().param_count() == 5 * 7 + 7 + 7 * 7 + 7 + 7 * 3 + 3);
  const Vector zero = Vector::Zero(mlp.shape().param_count());
  const Eigen::MatrixXd in = Eigen::MatrixXd::Random(5, 4);
  CHECK(mlp.forward(zero, in).isZero());
  Rng rng(1);
  const Vector p = mlp.initialize(rng);
  CHECK(mlp.forward(p, in) == mlp.forward(p, in));
  CHECK_THROWS_AS(mlp.forward(p, Eigen::MatrixXd::Zero(4, 2)), ShapeError);
  CHECK_THROWS_AS(mlp.forward(Vector::Zero(3), in), ShapeError);
}

TEST_CASE("regression loss vanishes at the target") {
  const Eigen::MatrixXd eps = Eigen::MatrixXd::Random(6, 4);
  const RegressionLoss r = regression_loss(eps, eps);
  CHECK(r.loss == 0.0);
  CHECK(r.d_predicted.isZero());
}

TEST_CASE("gradient matches central differences") {
  const GaussianWorld w = tiny_world();
  for (const NoiseSchedule& s : {NoiseSchedule::vp(), NoiseSchedule::ve()})
    for (TrainMode mode : {TrainMode::Naive, TrainMode::TimeNoise, TrainMode::CDMFixed, TrainMode::ConstantBeta}) {
      const TrainConfig c = tiny_config(mode);
      const EpsNetwork net(w.frames, w.dim, c, s);
      CHECK(net.mlp().shape().param_count() > 500);
      Rng rng(21);
      const Vector params = net.mlp().initialize(rng);
      const auto batch = prepare_batch(draw_data(w, c, 8, rng), s, c, rng);
      const auto gc = testing::gradient_check(net, params, batch);
      CHECK(gc.max_rel_error < 1e-4);
    }
}

TEST_CASE("with condition noise forced to zero every mode reduces to naive") {
  const GaussianWorld w = tiny_world();
  const NoiseSchedule s = NoiseSchedule::vp();
  TrainConfig naive = tiny_config(TrainMode::Naive);
  const EpsNetwork net(w.frames, w.dim, naive, s);
  Rng init(3);
  const Vector params = net.mlp().initialize(init);
  Rng a(4);
  const double base = loss_only(net, params, prepare_batch(draw_data(w, naive, 8, a), s, naive, a));
  for (TrainMode mode : {TrainMode::TimeNoise, TrainMode::CDMFixed, TrainMode::ConstantBeta}) {
    TrainConfig c = tiny_config(mode);
    c.force_condition_noise = 0.0;
    Rng b(4);
    CHECK(loss_only(net, params, prepare_batch(draw_data(w, c, 8, b), s, c, b)) == base);
  }
}

TEST_CASE("steps=0 returns the initialization; training is deterministic") {
  const GaussianWorld w = tiny_world();
  const NoiseSchedule s = NoiseSchedule::vp();
  TrainConfig c = tiny_config(TrainMode::TimeNoise);
  c.steps = 0;
  const Checkpoint zero = train(w, s, c);
  const EpsNetwork net(w.frames, w.dim, c, s);
  Rng rng(derive_seed(c.seed, 0));
  CHECK(zero.parameters == net.mlp().initialize(rng));
  CHECK(zero.initial_loss == zero.final_loss);

  c.steps = 40;
  const Checkpoint a = train(w, s, c);
  const Checkpoint b = train(w, s, c);
  CHECK(a.parameters == b.parameters);
  CHECK(a.final_loss == b.final_loss);
  CHECK(a.parameters != zero.parameters);
}

TEST_CASE("training reduces held-out loss") {
  TrainConfig c;
  c.steps = 3000;
  c.seed = 1;
  const Checkpoint ck = train(GaussianWorld{}, NoiseSchedule::vp(), c);
  CHECK(ck.final_loss < 0.5 * ck.initial_loss);
}

TEST_CASE("TimeNoise plumbing: later times see more condition noise") {
  const GaussianWorld w = tiny_world();
  TrainConfig c = tiny_config(TrainMode::TimeNoise);
  c.timenoise = {3.0, 5.0};
  auto mean_beta = [&](double t) {
    Rng rng(8);
    double acc = 0.0;
    for (int i = 0; i < 20000; ++i) acc += sample_beta(c.timenoise, t, rng);
    return acc / 20000;
  };
  CHECK(mean_beta(0.9) > mean_beta(0.1));
}

TEST_CASE("EDM log-normal: median training time increases with P_mean") {
  TrainConfig c;
  c.noise_sampler = NoiseLevelSampler::EDMLogNormal;
  const NoiseSchedule s = NoiseSchedule::vp();
  auto median_t = [&](double p_mean) {
    c.p_mean = p_mean;
    Rng rng(17);
    std::vector<double> ts;
    for (int i = 0; i < 20001; ++i) {
      const double u = rng.uniform();
      ts.push_back(training_time(s, c, u, rng.normal()));
    }
    std::nth_element(ts.begin(), ts.begin() + 10000, ts.end());
    return ts[10000];
  };
  const double a = median_t(-1.2), b = median_t(0.0), d = median_t(1.0);
  CHECK(a < b);
  CHECK(b < d);
}

TEST_CASE("mode names round-trip") {
  for (TrainMode m : {TrainMode::Naive, TrainMode::TimeNoise, TrainMode::CDMFixed, TrainMode::ConstantBeta})
    CHECK(train_mode_from_string(to_string(m)) == m);
  CHECK_THROWS_AS(train_mode_from_string("adamw"), ConfigError);
}

TEST_CASE("motion-conditioned checkpoints load as conditioned denoisers") {
  TrainConfig c = tiny_config(TrainMode::Naive);
  c.motion_conditioning = true;
  c.steps = 2;
  const Checkpoint ck = train(tiny_world(), NoiseSchedule::vp(), c);
  MlpDenoiser den(ck);
  CHECK(den.motion_conditioned());
  den.set_motion_target(1.0);
  CHECK(den.predict_eps(Video::Zero(3, 2), Vector::Zero(2), 0.5).allFinite());
}
