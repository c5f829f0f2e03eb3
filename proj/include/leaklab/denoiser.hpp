#pragma once

#include <memory>

#include "leaklab/gaussian_world.hpp"
#include "leaklab/schedule.hpp"
#include "leaklab/video.hpp"

namespace leaklab {

/// Clean-data estimate from an eps-prediction: (x_t - sigma_t eps_hat) / alpha_t.
Video one_step_from_eps(const NoiseSchedule& schedule, const Video& xt, const Video& eps_hat, double t);

/// eps-prediction from a clean-data estimate: (x_t - alpha_t x0_hat) / sigma_t. Throws at t = 0.
Video as_eps_prediction(const NoiseSchedule& schedule, const Video& xt, const Video& x0_hat, double t);

/// A denoiser answers both parameterizations; each implementation computes one natively.
/// An empty `y` means "no conditioning frame".
class Denoiser {
 public:
  explicit Denoiser(NoiseSchedule schedule) : schedule_(schedule) {}
  virtual ~Denoiser() = default;

  virtual Video predict_x0(const Video& xt, const Vector& y, double t) const = 0;
  virtual Video predict_eps(const Video& xt, const Vector& y, double t) const = 0;

  const NoiseSchedule& schedule() const { return schedule_; }

 protected:
  NoiseSchedule schedule_;
};

/// Bayes posterior mean E[X_0 | X_t (, frame_1 = y)] of a Gaussian world.
class ExactDenoiser : public Denoiser {
 public:
  /// Added to the N x N system matrix; bounds the perturbation when sigma_t -> 0 with singular C.
  static constexpr double kJitter = 1e-12;

  ExactDenoiser(GaussianWorld world, NoiseSchedule schedule, bool conditional);

  Video predict_x0(const Video& xt, const Vector& y, double t) const override;
  Video predict_eps(const Video& xt, const Vector& y, double t) const override;

  bool conditional() const { return conditional_; }
  const GaussianWorld& world() const { return world_; }

 private:
  GaussianWorld world_;
  bool conditional_;
};

/// Blends the exact conditional posterior mean with a static copy of the conditioning frame:
/// x0_hat = (1 - lambda(t)) exact + lambda(t) broadcast(y), lambda(t) = lambda_max t^p.
class LeakyDenoiser : public Denoiser {
 public:
  LeakyDenoiser(GaussianWorld world, NoiseSchedule schedule, double lambda_max, double power);

  Video predict_x0(const Video& xt, const Vector& y, double t) const override;
  Video predict_eps(const Video& xt, const Vector& y, double t) const override;

  double lambda(double t) const;

 private:
  ExactDenoiser exact_;
  double lambda_max_;
  double power_;
};

/// Returns the noise that actually produced x_t from a known x_0. Null calibration for diagnostics.
class OracleEpsDenoiser : public Denoiser {
 public:
  OracleEpsDenoiser(NoiseSchedule schedule, Video x0) : Denoiser(schedule), x0_(std::move(x0)) {}

  Video predict_x0(const Video& xt, const Vector& y, double t) const override;
  Video predict_eps(const Video& xt, const Vector& y, double t) const override;

 private:
  Video x0_;
};

}  // namespace leaklab
