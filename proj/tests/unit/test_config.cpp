#include <doctest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>

#include "leaklab/config.hpp"
#include "leaklab/errors.hpp"
#include "leaklab/io.hpp"

using namespace leaklab;

namespace {

std::string temp_path(const std::string& name) {
  return (std::filesystem::temp_directory_path() / ("leaklab_unit_" + name)).string();
}

}  // namespace

TEST_CASE("config round-trips bit-exactly") {
  ExperimentConfig c = default_config();
  c.seed = 123456789012345ULL;
  c.world.s_w = 0.1 + 0.2;  // not representable in short decimal
  c.train.mode = TrainMode::ConstantBeta;
  c.schedule = NoiseSchedule::ve(0.002, 80.0);
  c.sampler.condition = InferenceCondition::FixedNoise;
  c.train.seed = c.seed;  // the training seed is the experiment seed
  const Json j = config_to_json(c);
  const ExperimentConfig back = config_from_json(j);
  CHECK(config_to_json(back).dump() == j.dump());
  CHECK(back.world == c.world);
  CHECK(back.train == c.train);
  CHECK(back.world.s_w == c.world.s_w);
}

TEST_CASE("config validation") {
  CHECK_THROWS_AS(config_from_json(Json{{"sed", 1}}), ConfigError);
  CHECK_THROWS_AS(config_from_json(Json{{"world", {{"frames", 1}}}}), ConfigError);
  CHECK_THROWS_AS(config_from_json(Json{{"world", {{"s_w", -1.0}}}}), ConfigError);
  CHECK_THROWS_AS(config_from_json(Json{{"schedule", {{"kind", "cosine"}}}}), ConfigError);
  CHECK_THROWS_AS(config_from_json(Json{{"train", {{"mode", "adamw"}}}}), ConfigError);
  CHECK_THROWS_AS(config_from_json(Json{{"world", {{"frames", "eight"}}}}), ConfigError);
  const ExperimentConfig c = config_from_json(Json{{"timenoise", {{"beta_m", 10.0}}}});
  CHECK(c.sampler.fixed_noise == doctest::Approx(1.0));
  CHECK(c.train.timenoise.beta_m == 10.0);
}

TEST_CASE("checkpoint round-trips bit-exactly") {
  GaussianWorld w;
  w.frames = 3;
  w.dim = 2;
  w.m0 = Vector::Zero(2);
  w.drift = Vector::Constant(2, 1.0 / 3.0);
  TrainConfig t;
  t.hidden = 6;
  t.steps = 5;
  t.seed = 99;
  t.batch_size = 4;
  t.eval_batch = 4;
  const Checkpoint ck = train(w, NoiseSchedule::vp(), t);
  const std::string path = temp_path("ckpt.json");
  save_checkpoint(ck, path);
  const Checkpoint back = load_checkpoint(path);
  CHECK(back.parameters == ck.parameters);
  CHECK(back.world == ck.world);
  CHECK(back.train == ck.train);
  CHECK(back.shape == ck.shape);
  CHECK(back.final_loss == ck.final_loss);
  CHECK(checkpoint_to_json(back).dump() == checkpoint_to_json(ck).dump());

  Json broken = checkpoint_to_json(ck);
  broken["parameters"].erase(0);
  CHECK_THROWS_AS(checkpoint_from_json(broken), ConfigError);
  std::remove(path.c_str());
}

TEST_CASE("video CSV round-trips bit-exactly") {
  Rng rng(1);
  std::vector<Video> vs{rng.normal_matrix(3, 2), rng.normal_matrix(3, 2)};
  vs[0](1, 1) = 1e-300;
  const std::string path = temp_path("videos.csv");
  write_videos_csv(path, vs);
  const auto back = read_videos_csv(path, 3, 2);
  REQUIRE(back.size() == 2);
  CHECK(back[0] == vs[0]);
  CHECK(back[1] == vs[1]);
  CHECK_THROWS_AS(read_videos_csv(path, 2, 2), ShapeError);
  std::remove(path.c_str());
}

TEST_CASE("manifest carries a stable config hash") {
  const ExperimentConfig c = default_config();
  ExperimentConfig d = c;
  d.seed = 1;
  CHECK(config_hash(c) == config_hash(default_config()));
  CHECK(config_hash(c) != config_hash(d));
  const Json m = manifest("x", c);
  for (const char* key : {"experiment", "config_hash", "seed", "version", "config"}) CHECK(m.contains(key));
}
