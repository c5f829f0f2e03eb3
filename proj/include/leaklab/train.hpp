#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "leaklab/denoiser.hpp"
#include "leaklab/gaussian_world.hpp"
#include "leaklab/random.hpp"
#include "leaklab/schedule.hpp"
#include "leaklab/timenoise.hpp"

namespace leaklab {

enum class TrainMode { Naive, TimeNoise, CDMFixed, ConstantBeta };
enum class NoiseLevelSampler { UniformT, EDMLogNormal };

/// Lower bound of training times; t = 0 is never drawn.
inline constexpr double kMinTrainTime = 1e-4;

struct TrainConfig {
  TrainMode mode = TrainMode::Naive;
  TimeNoiseParams timenoise{3.0, 5.0, CorruptionVariant::Additive};
  double cdm_beta = 0.3;
  int steps = 20000;
  int batch_size = 64;
  double learning_rate = 1e-3;
  std::uint64_t seed = 0;
  NoiseLevelSampler noise_sampler = NoiseLevelSampler::UniformT;
  double p_mean = -1.2;
  double p_std = 1.2;
  int hidden = 64;
  int time_features = 7;
  /// Data scale used by the input/output preconditioning of the network.
  double sigma_data = 1.0;
  /// Append the world's expected motion score as an input; worlds with s_w ~ U[motion_s_w_min, motion_s_w_max].
  bool motion_conditioning = false;
  double motion_s_w_min = 0.25;
  double motion_s_w_max = 1.0;
  int eval_batch = 256;
  /// Test hook: replaces every sampled conditioning noise level. Not serialized.
  std::optional<double> force_condition_noise;

  void validate() const;
  bool operator==(const TrainConfig& o) const;
};

struct MlpShape {
  int input = 0;
  int hidden = 0;
  int output = 0;

  Eigen::Index param_count() const;
  bool operator==(const MlpShape&) const = default;
};

/// Two hidden tanh layers and a linear output, parameters stored as one flat vector
/// laid out as W1, b1, W2, b2, W3, b3 (weights column-major).
class Mlp {
 public:
  explicit Mlp(MlpShape shape) : shape_(shape) {}

  struct Cache {
    Eigen::MatrixXd input, h1, h2;
  };

  /// inputs: input x B. Returns output x B.
  Eigen::MatrixXd forward(const Vector& params, const Eigen::MatrixXd& inputs, Cache* cache = nullptr) const;

  /// Gradient of a scalar loss given dL/d(output) and the cache from forward.
  Vector backward(const Vector& params, const Cache& cache, const Eigen::MatrixXd& d_output) const;

  /// Uniform(-1/sqrt(fan_in), 1/sqrt(fan_in)) per layer.
  Vector initialize(Rng& rng) const;

  const MlpShape& shape() const { return shape_; }

 private:
  MlpShape shape_;
};

/// One noised training example.
struct NoisedItem {
  Video xt;
  Video eps;
  Vector y;
  double t = 0.0;
  double motion = 0.0;
};

/// eps-prediction network: feature construction, the MLP, and preconditioning
///   eps_hat = c_skip(t) x_t + c_out(t) F(c_in(t) x_t, y, time features[, motion])
/// with c_in = 1/sqrt(alpha^2 s^2 + sigma^2), c_skip = sigma c_in^2, c_out = alpha s c_in, where s is
/// sigma_data. c_skip x_t is the Bayes eps-estimate for N(0, s^2 I) data, and c_out normalizes the residual.
class EpsNetwork {
 public:
  EpsNetwork(int frames, int dim, const TrainConfig& config, NoiseSchedule schedule);

  const Mlp& mlp() const { return mlp_; }
  int frames() const { return frames_; }
  int dim() const { return dim_; }
  bool motion_conditioned() const { return motion_; }
  const NoiseSchedule& schedule() const { return schedule_; }

  Vector time_features(double t) const;
  Eigen::MatrixXd build_inputs(const std::vector<NoisedItem>& items) const;

  /// eps_hat for each item, as (N d) x B with flattened columns.
  Eigen::MatrixXd predict(const Vector& params, const std::vector<NoisedItem>& items,
                          Mlp::Cache* cache = nullptr) const;

  Video predict_eps(const Vector& params, const Video& xt, const Vector& y, double t, double motion = 0.0) const;

  struct Preconditioning {
    double c_in, c_skip, c_out;
  };
  Preconditioning preconditioning(double t) const;

 private:
  int frames_;
  int dim_;
  int time_features_;
  bool motion_;
  double sigma_data_;
  NoiseSchedule schedule_;
  Mlp mlp_;
};

struct DataItem {
  Video x0;
  Vector y0;
  double motion = 0.0;
};

std::vector<DataItem> draw_data(const GaussianWorld& world, const TrainConfig& config, int count, Rng& rng);

/// Draws t, the conditioning corruption and the forward noise for each item.
/// Every mode consumes the same random draws, so modes are paired under a shared seed.
std::vector<NoisedItem> prepare_batch(const std::vector<DataItem>& data, const NoiseSchedule& schedule,
                                      const TrainConfig& config, Rng& rng);

/// Training time for one standard normal / uniform draw under the configured sampler.
double training_time(const NoiseSchedule& schedule, const TrainConfig& config, double u, double z);

struct LossGrad {
  double loss = 0.0;
  Vector grad;
};

struct RegressionLoss {
  double loss = 0.0;
  Eigen::MatrixXd d_predicted;
};

/// Mean squared error over items and coordinates, and dL/d(prediction).
RegressionLoss regression_loss(const Eigen::MatrixXd& predicted, const Eigen::MatrixXd& target);

LossGrad loss_and_gradient(const EpsNetwork& net, const Vector& params, const std::vector<NoisedItem>& batch);

LossGrad loss_and_gradient(const EpsNetwork& net, const Vector& params, const std::vector<DataItem>& data,
                           const NoiseSchedule& schedule, const TrainConfig& config, Rng& rng);

double loss_only(const EpsNetwork& net, const Vector& params, const std::vector<NoisedItem>& batch);

/// Bias-corrected adaptive-moment optimizer with decays (0.9, 0.999) and no weight decay.
class Adam {
 public:
  Adam(Eigen::Index size, double learning_rate, double beta1 = 0.9, double beta2 = 0.999, double epsilon = 1e-8);
  void step(Vector& params, const Vector& grad);

 private:
  double lr_, beta1_, beta2_, epsilon_;
  Vector m_, v_;
  long step_ = 0;
};

struct Checkpoint {
  int format_version = 1;
  GaussianWorld world;
  NoiseSchedule schedule;
  TrainConfig train;
  std::uint64_t seed = 0;
  MlpShape shape;
  Vector parameters;
  double initial_loss = 0.0;
  double final_loss = 0.0;
};

/// Runs `config.steps` optimizer updates. Throws NumericalError on a non-finite loss.
Checkpoint train(const GaussianWorld& world, const NoiseSchedule& schedule, const TrainConfig& config);

/// A trained eps-network behind the Denoiser interface.
class MlpDenoiser : public Denoiser {
 public:
  explicit MlpDenoiser(const Checkpoint& checkpoint);

  Video predict_eps(const Video& xt, const Vector& y, double t) const override;
  Video predict_x0(const Video& xt, const Vector& y, double t) const override;

  bool motion_conditioned() const { return net_.motion_conditioned(); }
  void set_motion_target(double target) { motion_target_ = target; }

 private:
  EpsNetwork net_;
  Vector params_;
  double motion_target_ = 0.0;
};

std::string to_string(TrainMode mode);
TrainMode train_mode_from_string(const std::string& s);

}  // namespace leaklab
