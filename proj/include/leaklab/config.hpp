#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "leaklab/analytic_init.hpp"
#include "leaklab/gaussian_world.hpp"
#include "leaklab/sampler.hpp"
#include "leaklab/schedule.hpp"
#include "leaklab/timenoise.hpp"
#include "leaklab/train.hpp"

namespace leaklab {

using Json = nlohmann::json;

struct SamplerSection {
  double M = 1.0;
  int steps = 50;
  InitKind init = InitKind::Standard;
  InferenceCondition condition = InferenceCondition::Clean;
  /// Resolved to 0.1 * beta_m when absent from the file.
  double fixed_noise = 0.0;
  int samples = 1000;
};

struct DiagnosticsSection {
  std::vector<double> t_grid{0.05, 0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9, 0.95};
  int eval_size = 256;
  double lambda_max = 0.8;
  double leak_power = 4.0;
  std::vector<double> motion_targets{2.0, 3.0, 4.0, 5.0};
  int sweep_samples = 500;
  std::vector<double> M_grid{1.0, 0.96, 0.92, 0.88, 0.84, 0.8};
  int ablation_samples = 2000;
  int moment_samples = 5000;
  /// Conditioning frame for the ablation; resolved to m0 when absent.
  Vector y0;
};

/// The full resolved experiment configuration.
struct ExperimentConfig {
  std::uint64_t seed = 0;
  std::string output_dir = ".";
  GaussianWorld world;
  NoiseSchedule schedule;
  TimeNoiseParams timenoise{3.0, 5.0, CorruptionVariant::Additive};
  TrainConfig train;
  SamplerSection sampler;
  DiagnosticsSection diagnostics;

  /// Runs every component's validation.
  void validate() const;
};

/// Parses a config document; missing keys take defaults, unknown keys are rejected with ConfigError.
ExperimentConfig config_from_json(const Json& j);
Json config_to_json(const ExperimentConfig& config);
ExperimentConfig load_config(const std::string& path);
ExperimentConfig default_config();

Json world_to_json(const GaussianWorld& w);
GaussianWorld world_from_json(const Json& j);
Json schedule_to_json(const NoiseSchedule& s);
NoiseSchedule schedule_from_json(const Json& j);
Json timenoise_to_json(const TimeNoiseParams& p);
TimeNoiseParams timenoise_from_json(const Json& j);
Json train_to_json(const TrainConfig& c);
TrainConfig train_from_json(const Json& j, const TimeNoiseParams& timenoise, std::uint64_t seed);

Json init_to_json(const InitDistribution& init, const DataMoments& moments);
InitDistribution init_from_json(const Json& j);

Json checkpoint_to_json(const Checkpoint& ckpt);
Checkpoint checkpoint_from_json(const Json& j);
void save_checkpoint(const Checkpoint& ckpt, const std::string& path);
Checkpoint load_checkpoint(const std::string& path);

}  // namespace leaklab
