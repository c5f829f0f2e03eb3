#include "leaklab/config.hpp"

#include <fstream>
#include <set>

#include "leaklab/errors.hpp"

namespace leaklab {

namespace {

void reject_unknown(const Json& j, std::initializer_list<const char*> allowed, const std::string& where) {
  if (!j.is_object()) throw ConfigError(where + ": expected a JSON object");
  std::set<std::string> ok(allowed.begin(), allowed.end());
  for (const auto& [key, value] : j.items())
    if (!ok.count(key)) throw ConfigError(where + ": unknown key '" + key + "'");
}

template <typename T>
void read(const Json& j, const char* key, T& out, const std::string& where) {
  if (!j.contains(key)) return;
  try {
    out = j.at(key).get<T>();
  } catch (const Json::exception& e) {
    throw ConfigError(where + "." + key + ": " + e.what());
  }
}

Vector read_vector(const Json& j, const std::string& where) {
  if (!j.is_array()) throw ConfigError(where + ": expected an array of numbers");
  Vector v(static_cast<Eigen::Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i) {
    if (!j[i].is_number()) throw ConfigError(where + ": expected an array of numbers");
    v(static_cast<Eigen::Index>(i)) = j[i].get<double>();
  }
  return v;
}

Json vector_json(const Vector& v) {
  Json a = Json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(v(i));
  return a;
}

}  // namespace

// ---------------------------------------------------------------------------------------------

Json world_to_json(const GaussianWorld& w) {
  return Json{{"frames", w.frames}, {"dim", w.dim},   {"m0", vector_json(w.m0)},
              {"s0", w.s0},         {"drift", vector_json(w.drift)},
              {"s_w", w.s_w},       {"random_cond_frame", w.random_cond_frame}};
}

GaussianWorld world_from_json(const Json& j) {
  const std::string where = "world";
  reject_unknown(j, {"frames", "dim", "m0", "s0", "drift", "s_w", "random_cond_frame"}, where);
  GaussianWorld w;
  read(j, "frames", w.frames, where);
  read(j, "dim", w.dim, where);
  read(j, "s0", w.s0, where);
  read(j, "s_w", w.s_w, where);
  read(j, "random_cond_frame", w.random_cond_frame, where);
  // Scalars broadcast across coordinates.
  auto vec = [&](const char* key, double fallback) {
    if (!j.contains(key)) return Vector(Vector::Constant(w.dim, fallback));
    if (j.at(key).is_number()) return Vector(Vector::Constant(w.dim, j.at(key).get<double>()));
    return read_vector(j.at(key), where + "." + key);
  };
  w.m0 = vec("m0", 0.0);
  w.drift = vec("drift", 0.2);
  w.validate();
  return w;
}

Json schedule_to_json(const NoiseSchedule& s) {
  if (s.kind == ScheduleKind::VP) return Json{{"kind", "vp"}, {"beta_min", s.beta_min}, {"beta_max", s.beta_max}};
  return Json{{"kind", "ve"}, {"sigma_min", s.sigma_min}, {"sigma_max", s.sigma_max}};
}

NoiseSchedule schedule_from_json(const Json& j) {
  const std::string where = "schedule";
  std::string kind = "vp";
  if (j.is_object() && j.contains("kind")) read(j, "kind", kind, where);
  NoiseSchedule s;
  if (kind == "vp") {
    reject_unknown(j, {"kind", "beta_min", "beta_max"}, where);
    s.kind = ScheduleKind::VP;
    read(j, "beta_min", s.beta_min, where);
    read(j, "beta_max", s.beta_max, where);
  } else if (kind == "ve") {
    reject_unknown(j, {"kind", "sigma_min", "sigma_max"}, where);
    s.kind = ScheduleKind::VE;
    read(j, "sigma_min", s.sigma_min, where);
    read(j, "sigma_max", s.sigma_max, where);
  } else {
    throw ConfigError("schedule.kind must be 'vp' or 've'");
  }
  s.validate();
  return s;
}

Json timenoise_to_json(const TimeNoiseParams& p) {
  return Json{{"beta_m", p.beta_m},
              {"a", p.a},
              {"variant", p.variant == CorruptionVariant::Additive ? "additive" : "interpolation"}};
}

TimeNoiseParams timenoise_from_json(const Json& j) {
  const std::string where = "timenoise";
  reject_unknown(j, {"beta_m", "a", "variant"}, where);
  TimeNoiseParams p{3.0, 5.0, CorruptionVariant::Additive};
  read(j, "beta_m", p.beta_m, where);
  read(j, "a", p.a, where);
  std::string variant = "additive";
  read(j, "variant", variant, where);
  if (variant == "additive")
    p.variant = CorruptionVariant::Additive;
  else if (variant == "interpolation")
    p.variant = CorruptionVariant::Interpolation;
  else
    throw ConfigError("timenoise.variant must be 'additive' or 'interpolation'");
  p.validate();
  return p;
}

Json train_to_json(const TrainConfig& c) {
  return Json{{"mode", to_string(c.mode)},
              {"cdm_beta", c.cdm_beta},
              {"steps", c.steps},
              {"batch_size", c.batch_size},
              {"learning_rate", c.learning_rate},
              {"noise_sampler", c.noise_sampler == NoiseLevelSampler::UniformT ? "uniform" : "edm"},
              {"p_mean", c.p_mean},
              {"p_std", c.p_std},
              {"hidden", c.hidden},
              {"time_features", c.time_features},
              {"sigma_data", c.sigma_data},
              {"motion_conditioning", c.motion_conditioning},
              {"motion_s_w_min", c.motion_s_w_min},
              {"motion_s_w_max", c.motion_s_w_max},
              {"eval_batch", c.eval_batch}};
}

TrainConfig train_from_json(const Json& j, const TimeNoiseParams& timenoise, std::uint64_t seed) {
  const std::string where = "train";
  reject_unknown(j,
                 {"mode", "cdm_beta", "steps", "batch_size", "learning_rate", "noise_sampler", "p_mean", "p_std",
                  "hidden", "time_features", "sigma_data", "motion_conditioning", "motion_s_w_min",
                  "motion_s_w_max", "eval_batch"},
                 where);
  TrainConfig c;
  c.timenoise = timenoise;
  c.seed = seed;
  std::string mode = "naive", sampler = "uniform";
  read(j, "mode", mode, where);
  c.mode = train_mode_from_string(mode);
  read(j, "cdm_beta", c.cdm_beta, where);
  read(j, "steps", c.steps, where);
  read(j, "batch_size", c.batch_size, where);
  read(j, "learning_rate", c.learning_rate, where);
  read(j, "noise_sampler", sampler, where);
  if (sampler == "uniform")
    c.noise_sampler = NoiseLevelSampler::UniformT;
  else if (sampler == "edm")
    c.noise_sampler = NoiseLevelSampler::EDMLogNormal;
  else
    throw ConfigError("train.noise_sampler must be 'uniform' or 'edm'");
  read(j, "p_mean", c.p_mean, where);
  read(j, "p_std", c.p_std, where);
  read(j, "hidden", c.hidden, where);
  read(j, "time_features", c.time_features, where);
  read(j, "sigma_data", c.sigma_data, where);
  read(j, "motion_conditioning", c.motion_conditioning, where);
  read(j, "motion_s_w_min", c.motion_s_w_min, where);
  read(j, "motion_s_w_max", c.motion_s_w_max, where);
  read(j, "eval_batch", c.eval_batch, where);
  c.validate();
  return c;
}

namespace {

Json sampler_to_json(const SamplerSection& s) {
  return Json{{"M", s.M},
              {"steps", s.steps},
              {"init", to_string(s.init)},
              {"condition", s.condition == InferenceCondition::Clean ? "clean" : "fixed_noise"},
              {"fixed_noise", s.fixed_noise},
              {"samples", s.samples}};
}

SamplerSection sampler_from_json(const Json& j, const TimeNoiseParams& timenoise) {
  const std::string where = "sampler";
  reject_unknown(j, {"M", "steps", "init", "condition", "fixed_noise", "samples"}, where);
  SamplerSection s;
  read(j, "M", s.M, where);
  read(j, "steps", s.steps, where);
  read(j, "samples", s.samples, where);
  std::string init = "standard", condition = "clean";
  read(j, "init", init, where);
  read(j, "condition", condition, where);
  if (init == "standard")
    s.init = InitKind::Standard;
  else if (init == "analytic")
    s.init = InitKind::Analytic;
  else
    throw ConfigError("sampler.init must be 'standard' or 'analytic'");
  if (condition == "clean")
    s.condition = InferenceCondition::Clean;
  else if (condition == "fixed_noise")
    s.condition = InferenceCondition::FixedNoise;
  else
    throw ConfigError("sampler.condition must be 'clean' or 'fixed_noise'");
  s.fixed_noise = 0.1 * timenoise.beta_m;
  if (j.contains("fixed_noise") && !j.at("fixed_noise").is_null()) read(j, "fixed_noise", s.fixed_noise, where);
  if (!(s.M > 0.0 && s.M <= 1.0)) throw ConfigError("sampler.M must lie in (0, 1]");
  if (s.steps < 1) throw ConfigError("sampler.steps must be >= 1");
  if (s.samples < 1) throw ConfigError("sampler.samples must be >= 1");
  if (!(s.fixed_noise >= 0.0)) throw ConfigError("sampler.fixed_noise must be >= 0");
  return s;
}

std::vector<double> read_grid(const Json& j, const char* key, std::vector<double> fallback, const std::string& where) {
  if (!j.contains(key)) return fallback;
  const Vector v = read_vector(j.at(key), where + "." + key);
  return std::vector<double>(v.data(), v.data() + v.size());
}

Json diagnostics_to_json(const DiagnosticsSection& d) {
  return Json{{"t_grid", d.t_grid},
              {"eval_size", d.eval_size},
              {"lambda_max", d.lambda_max},
              {"leak_power", d.leak_power},
              {"motion_targets", d.motion_targets},
              {"sweep_samples", d.sweep_samples},
              {"M_grid", d.M_grid},
              {"ablation_samples", d.ablation_samples},
              {"moment_samples", d.moment_samples},
              {"y0", vector_json(d.y0)}};
}

DiagnosticsSection diagnostics_from_json(const Json& j, const GaussianWorld& world) {
  const std::string where = "diagnostics";
  reject_unknown(j,
                 {"t_grid", "eval_size", "lambda_max", "leak_power", "motion_targets", "sweep_samples", "M_grid",
                  "ablation_samples", "moment_samples", "y0"},
                 where);
  DiagnosticsSection d;
  d.t_grid = read_grid(j, "t_grid", d.t_grid, where);
  d.motion_targets = read_grid(j, "motion_targets", d.motion_targets, where);
  d.M_grid = read_grid(j, "M_grid", d.M_grid, where);
  read(j, "eval_size", d.eval_size, where);
  read(j, "lambda_max", d.lambda_max, where);
  read(j, "leak_power", d.leak_power, where);
  read(j, "sweep_samples", d.sweep_samples, where);
  read(j, "ablation_samples", d.ablation_samples, where);
  read(j, "moment_samples", d.moment_samples, where);
  d.y0 = j.contains("y0") ? read_vector(j.at("y0"), where + ".y0") : world.m0;

  for (double t : d.t_grid)
    if (!(t > 0.0 && t <= 1.0)) throw ConfigError("diagnostics.t_grid entries must lie in (0, 1]");
  for (double m : d.M_grid)
    if (!(m > 0.0 && m <= 1.0)) throw ConfigError("diagnostics.M_grid entries must lie in (0, 1]");
  if (d.eval_size < 1 || d.sweep_samples < 1 || d.ablation_samples < 2 || d.moment_samples < 2)
    throw ConfigError("diagnostics: sample counts must be positive (ablation/moment counts >= 2)");
  if (!(d.lambda_max >= 0.0 && d.lambda_max <= 1.0)) throw ConfigError("diagnostics.lambda_max must lie in [0, 1]");
  if (!(d.leak_power > 0.0)) throw ConfigError("diagnostics.leak_power must be > 0");
  if (d.y0.size() != world.dim) throw ConfigError("diagnostics.y0 must have length world.dim");
  return d;
}

}  // namespace

void ExperimentConfig::validate() const {
  world.validate();
  schedule.validate();
  timenoise.validate();
  train.validate();
}

ExperimentConfig config_from_json(const Json& j) {
  reject_unknown(j, {"seed", "output_dir", "world", "schedule", "timenoise", "train", "sampler", "diagnostics"},
                 "config");
  ExperimentConfig c;
  read(j, "seed", c.seed, "config");
  read(j, "output_dir", c.output_dir, "config");
  const Json empty = Json::object();
  c.world = world_from_json(j.value("world", empty));
  c.schedule = schedule_from_json(j.value("schedule", empty));
  c.timenoise = timenoise_from_json(j.value("timenoise", empty));
  c.train = train_from_json(j.value("train", empty), c.timenoise, c.seed);
  c.sampler = sampler_from_json(j.value("sampler", empty), c.timenoise);
  c.diagnostics = diagnostics_from_json(j.value("diagnostics", empty), c.world);
  c.validate();
  return c;
}

Json config_to_json(const ExperimentConfig& c) {
  return Json{{"seed", c.seed},
              {"output_dir", c.output_dir},
              {"world", world_to_json(c.world)},
              {"schedule", schedule_to_json(c.schedule)},
              {"timenoise", timenoise_to_json(c.timenoise)},
              {"train", train_to_json(c.train)},
              {"sampler", sampler_to_json(c.sampler)},
              {"diagnostics", diagnostics_to_json(c.diagnostics)}};
}

ExperimentConfig default_config() { return config_from_json(Json::object()); }

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file '" + path + "'");
  Json j;
  try {
    j = Json::parse(in);
  } catch (const Json::parse_error& e) {
    throw ConfigError("config file '" + path + "' is not valid JSON: " + e.what());
  }
  return config_from_json(j);
}

// ---------------------------------------------------------------------------------------------

Json init_to_json(const InitDistribution& init, const DataMoments& moments) {
  return Json{{"M", init.M},
              {"mu_p", vector_json(init.mu_p)},
              {"sigma_p2", init.sigma_p2},
              {"moments",
               {{"mean", vector_json(moments.mean)}, {"avg_var", moments.avg_var}, {"n_samples", moments.n_samples}}}};
}

InitDistribution init_from_json(const Json& j) {
  reject_unknown(j, {"M", "mu_p", "sigma_p2", "moments"}, "init");
  InitDistribution init;
  read(j, "M", init.M, "init");
  read(j, "sigma_p2", init.sigma_p2, "init");
  if (!j.contains("mu_p")) throw ConfigError("init: missing mu_p");
  init.mu_p = read_vector(j.at("mu_p"), "init.mu_p");
  init.validate();
  return init;
}

Json checkpoint_to_json(const Checkpoint& ckpt) {
  Json params = Json::array();
  for (Eigen::Index i = 0; i < ckpt.parameters.size(); ++i) params.push_back(ckpt.parameters(i));
  const MlpShape& s = ckpt.shape;
  return Json{{"format_version", ckpt.format_version},
              {"config",
               {{"world", world_to_json(ckpt.world)},
                {"schedule", schedule_to_json(ckpt.schedule)},
                {"timenoise", timenoise_to_json(ckpt.train.timenoise)},
                {"train", train_to_json(ckpt.train)}}},
              {"seed", ckpt.seed},
              {"layer_shapes", Json::array({Json::array({s.input, s.hidden}), Json::array({s.hidden, s.hidden}),
                                            Json::array({s.hidden, s.output})})},
              {"parameters", std::move(params)},
              {"initial_loss", ckpt.initial_loss},
              {"final_loss", ckpt.final_loss}};
}

Checkpoint checkpoint_from_json(const Json& j) {
  reject_unknown(j, {"format_version", "config", "seed", "layer_shapes", "parameters", "initial_loss", "final_loss"},
                 "checkpoint");
  Checkpoint c;
  read(j, "format_version", c.format_version, "checkpoint");
  if (c.format_version != 1) throw ConfigError("checkpoint: unsupported format_version");
  read(j, "seed", c.seed, "checkpoint");
  const Json& cfg = j.at("config");
  reject_unknown(cfg, {"world", "schedule", "timenoise", "train"}, "checkpoint.config");
  c.world = world_from_json(cfg.at("world"));
  c.schedule = schedule_from_json(cfg.at("schedule"));
  c.train = train_from_json(cfg.at("train"), timenoise_from_json(cfg.at("timenoise")), c.seed);
  const Json& shapes = j.at("layer_shapes");
  if (!shapes.is_array() || shapes.size() != 3) throw ConfigError("checkpoint: layer_shapes must list 3 layers");
  c.shape = MlpShape{shapes[0][0].get<int>(), shapes[0][1].get<int>(), shapes[2][1].get<int>()};
  c.parameters = read_vector(j.at("parameters"), "checkpoint.parameters");
  read(j, "initial_loss", c.initial_loss, "checkpoint");
  read(j, "final_loss", c.final_loss, "checkpoint");
  if (c.parameters.size() != c.shape.param_count()) throw ConfigError("checkpoint: parameter count mismatch");
  return c;
}

void save_checkpoint(const Checkpoint& ckpt, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot write checkpoint '" + path + "'");
  out << checkpoint_to_json(ckpt).dump(1) << '\n';
}

Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open checkpoint '" + path + "'");
  try {
    return checkpoint_from_json(Json::parse(in));
  } catch (const Json::exception& e) {
    throw ConfigError("checkpoint '" + path + "' is malformed: " + e.what());
  }
}

}  // namespace leaklab
