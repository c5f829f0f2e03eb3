#include "leaklab/sampler.hpp"

#include <cmath>
#include <string>

#include "leaklab/errors.hpp"

namespace leaklab {

std::string to_string(InitKind kind) { return kind == InitKind::Standard ? "standard" : "analytic"; }

void SamplerConfig::validate() const {
  if (!(M > 0.0 && M <= 1.0)) throw ConfigError("sampler: start time M must lie in (0, 1]");
  if (steps < 1) throw ConfigError("sampler: steps must be >= 1");
  if (init == InitKind::Analytic) {
    if (!analytic) throw ConfigError("sampler: analytic init requires an init distribution");
    analytic->validate();
  }
  if (!(fixed_noise >= 0.0)) throw ConfigError("sampler: fixed_noise must be >= 0");
}

std::vector<double> time_grid(double M, int steps) {
  std::vector<double> grid(static_cast<std::size_t>(steps) + 1);
  for (int k = 0; k <= steps; ++k) grid[static_cast<std::size_t>(k)] = M * static_cast<double>(steps - k) / steps;
  return grid;
}

Video draw_initial(const SamplerConfig& config, const NoiseSchedule& schedule, int frames, int dim, Rng& rng) {
  const Video z = rng.normal_matrix(frames, dim);
  if (config.init == InitKind::Standard) return std::sqrt(standard_init_variance(schedule, config.M)) * z;
  const InitDistribution& init = *config.analytic;
  if (init.mu_p.size() != static_cast<Eigen::Index>(frames) * dim) throw ShapeError("draw_initial: mu_p size mismatch");
  return unflatten(init.mu_p, frames, dim) + std::sqrt(init.sigma_p2) * z;
}

Video ddim_update(const NoiseSchedule& schedule, const Video& xt, const Video& x0_hat, double t_from, double t_to) {
  if (t_to == 0.0) return x0_hat;
  const auto [a_from, s_from] = alpha_sigma(schedule, t_from);
  const auto [a_to, s_to] = alpha_sigma(schedule, t_to);
  return a_to * x0_hat + (s_to / s_from) * (xt - a_from * x0_hat);
}

Video ddim_step(const Denoiser& denoiser, const Video& xt, const Vector& y, double t_from, double t_to) {
  check_time(t_from);
  check_time(t_to);
  if (t_to == t_from) return xt;
  if (t_to > t_from) throw DomainError("ddim_step: t_to must not exceed t_from");
  return ddim_update(denoiser.schedule(), xt, denoiser.predict_x0(xt, y, t_from), t_from, t_to);
}

Video sample(const Denoiser& denoiser, const Vector& y0, int frames, const SamplerConfig& config, Rng& rng) {
  config.validate();
  const NoiseSchedule& schedule = denoiser.schedule();
  const int dim = static_cast<int>(y0.size());

  Video x = draw_initial(config, schedule, frames, dim, rng);
  const Vector eps_y = rng.normal_vector(dim);
  const Vector y = config.condition == InferenceCondition::FixedNoise ? Vector(y0 + config.fixed_noise * eps_y) : y0;

  const std::vector<double> grid = time_grid(config.M, config.steps);
  for (int k = 0; k < config.steps; ++k) {
    const double t_from = grid[static_cast<std::size_t>(k)];
    const double t_to = grid[static_cast<std::size_t>(k) + 1];
    x = ddim_update(schedule, x, denoiser.predict_x0(x, y, t_from), t_from, t_to);
    if (!x.allFinite()) throw NumericalError("sampler diverged at step " + std::to_string(k));
  }
  return x;
}

std::vector<Video> sample_chains(const Denoiser& denoiser, const std::vector<Vector>& y0s, int frames,
                                 const SamplerConfig& config, std::uint64_t seed) {
  std::vector<Video> out;
  out.reserve(y0s.size());
  for (std::size_t j = 0; j < y0s.size(); ++j) {
    Rng rng(derive_seed(seed, j));
    out.push_back(sample(denoiser, y0s[j], frames, config, rng));
  }
  return out;
}

}  // namespace leaklab
