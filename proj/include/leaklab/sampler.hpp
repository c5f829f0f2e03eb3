#pragma once

#include <string>

#include <cstdint>
#include <optional>
#include <vector>

#include "leaklab/analytic_init.hpp"
#include "leaklab/denoiser.hpp"
#include "leaklab/random.hpp"

namespace leaklab {

enum class InitKind { Standard, Analytic };
enum class InferenceCondition { Clean, FixedNoise };

std::string to_string(InitKind kind);

struct SamplerConfig {
  double M = 1.0;
  int steps = 50;
  InitKind init = InitKind::Standard;
  /// Required when init == Analytic.
  std::optional<InitDistribution> analytic;
  InferenceCondition condition = InferenceCondition::Clean;
  /// Noise level added once per chain to the conditioning frame under FixedNoise.
  double fixed_noise = 0.0;

  void validate() const;
};

/// K + 1 points M = t_0 > t_1 > ... > t_K = 0, uniformly spaced.
std::vector<double> time_grid(double M, int steps);

/// X_M from the configured initial distribution, shaped frames x dim.
Video draw_initial(const SamplerConfig& config, const NoiseSchedule& schedule, int frames, int dim, Rng& rng);

/// Deterministic update x_to = alpha_to x0_hat + (sigma_to / sigma_from)(x_from - alpha_from x0_hat);
/// returns x0_hat directly when t_to = 0.
Video ddim_step(const Denoiser& denoiser, const Video& xt, const Vector& y, double t_from, double t_to);

/// Same update for a precomputed clean-data estimate.
Video ddim_update(const NoiseSchedule& schedule, const Video& xt, const Video& x0_hat, double t_from, double t_to);

/// One chain: draws X_M, the (optionally noised) condition, then iterates ddim_step to t = 0.
Video sample(const Denoiser& denoiser, const Vector& y0, int frames, const SamplerConfig& config, Rng& rng);

/// Chain j uses its own stream derive_seed(seed, j) and conditioning frame y0s[j].
std::vector<Video> sample_chains(const Denoiser& denoiser, const std::vector<Vector>& y0s, int frames,
                                 const SamplerConfig& config, std::uint64_t seed);

}  // namespace leaklab
