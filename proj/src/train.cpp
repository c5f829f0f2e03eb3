#include "leaklab/train.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "leaklab/errors.hpp"

namespace leaklab {

void TrainConfig::validate() const {
  if (steps < 0) throw ConfigError("train: steps must be >= 0");
  if (batch_size < 1) throw ConfigError("train: batch_size must be >= 1");
  if (!(learning_rate > 0.0)) throw ConfigError("train: learning_rate must be > 0");
  if (hidden < 1) throw ConfigError("train: hidden must be >= 1");
  if (time_features < 1 || time_features % 2 == 0) throw ConfigError("train: time_features must be odd and >= 1");
  if (!(sigma_data > 0.0)) throw ConfigError("train: sigma_data must be > 0");
  if (!(p_std > 0.0)) throw ConfigError("train: p_std must be > 0");
  if (!(cdm_beta >= 0.0)) throw ConfigError("train: cdm_beta must be >= 0");
  if (eval_batch < 1) throw ConfigError("train: eval_batch must be >= 1");
  if (motion_conditioning && !(motion_s_w_min > 0.0 && motion_s_w_max >= motion_s_w_min))
    throw ConfigError("train: motion s_w range must satisfy 0 < min <= max");
  timenoise.validate();
}

bool TrainConfig::operator==(const TrainConfig& o) const {
  return mode == o.mode && timenoise == o.timenoise && cdm_beta == o.cdm_beta && steps == o.steps &&
         batch_size == o.batch_size && learning_rate == o.learning_rate && seed == o.seed &&
         noise_sampler == o.noise_sampler && p_mean == o.p_mean && p_std == o.p_std && hidden == o.hidden &&
         time_features == o.time_features && sigma_data == o.sigma_data &&
         motion_conditioning == o.motion_conditioning && motion_s_w_min == o.motion_s_w_min &&
         motion_s_w_max == o.motion_s_w_max && eval_batch == o.eval_batch;
}

std::string to_string(TrainMode mode) {
  switch (mode) {
    case TrainMode::Naive: return "naive";
    case TrainMode::TimeNoise: return "timenoise";
    case TrainMode::CDMFixed: return "cdm";
    case TrainMode::ConstantBeta: return "constant";
  }
  return "naive";
}

TrainMode train_mode_from_string(const std::string& s) {
  if (s == "naive") return TrainMode::Naive;
  if (s == "timenoise") return TrainMode::TimeNoise;
  if (s == "cdm") return TrainMode::CDMFixed;
  if (s == "constant") return TrainMode::ConstantBeta;
  throw ConfigError("unknown training mode '" + s + "' (expected naive|timenoise|cdm|constant)");
}

// ---------------------------------------------------------------------------------------------
// MLP

Eigen::Index MlpShape::param_count() const {
  const Eigen::Index i = input, h = hidden, o = output;
  return h * i + h + h * h + h + o * h + o;
}

namespace {

struct Layout {
  Eigen::Index w1, b1, w2, b2, w3, b3;
};

Layout layout_of(const MlpShape& s) {
  Layout l{};
  const Eigen::Index i = s.input, h = s.hidden, o = s.output;
  l.w1 = 0;
  l.b1 = l.w1 + h * i;
  l.w2 = l.b1 + h;
  l.b2 = l.w2 + h * h;
  l.w3 = l.b2 + h;
  l.b3 = l.w3 + o * h;
  return l;
}

using ConstMap = Eigen::Map<const Eigen::MatrixXd>;
using ConstVecMap = Eigen::Map<const Eigen::VectorXd>;

}  // namespace

Eigen::MatrixXd Mlp::forward(const Vector& params, const Eigen::MatrixXd& inputs, Cache* cache) const {
  if (params.size() != shape_.param_count()) throw ShapeError("mlp: parameter count mismatch");
  if (inputs.rows() != shape_.input) throw ShapeError("mlp: input width mismatch");
  const Layout l = layout_of(shape_);
  const int h = shape_.hidden, in = shape_.input, out = shape_.output;
  ConstMap w1(params.data() + l.w1, h, in), w2(params.data() + l.w2, h, h), w3(params.data() + l.w3, out, h);
  ConstVecMap b1(params.data() + l.b1, h), b2(params.data() + l.b2, h), b3(params.data() + l.b3, out);

  Eigen::MatrixXd h1 = ((w1 * inputs).colwise() + b1).array().tanh().matrix();
  Eigen::MatrixXd h2 = ((w2 * h1).colwise() + b2).array().tanh().matrix();
  Eigen::MatrixXd y = (w3 * h2).colwise() + b3;
  if (cache) {
    cache->input = inputs;
    cache->h1 = std::move(h1);
    cache->h2 = std::move(h2);
  }
  return y;
}

Vector Mlp::backward(const Vector& params, const Cache& cache, const Eigen::MatrixXd& d_output) const {
  const Layout l = layout_of(shape_);
  const int h = shape_.hidden, in = shape_.input, out = shape_.output;
  ConstMap w2(params.data() + l.w2, h, h), w3(params.data() + l.w3, out, h);

  Vector grad(params.size());
  Eigen::Map<Eigen::MatrixXd> g_w1(grad.data() + l.w1, h, in), g_w2(grad.data() + l.w2, h, h),
      g_w3(grad.data() + l.w3, out, h);
  Eigen::Map<Eigen::VectorXd> g_b1(grad.data() + l.b1, h), g_b2(grad.data() + l.b2, h), g_b3(grad.data() + l.b3, out);

  g_w3.noalias() = d_output * cache.h2.transpose();
  g_b3 = d_output.rowwise().sum();
  const Eigen::MatrixXd d_a2 =
      ((w3.transpose() * d_output).array() * (1.0 - cache.h2.array().square())).matrix();
  g_w2.noalias() = d_a2 * cache.h1.transpose();
  g_b2 = d_a2.rowwise().sum();
  const Eigen::MatrixXd d_a1 = ((w2.transpose() * d_a2).array() * (1.0 - cache.h1.array().square())).matrix();
  g_w1.noalias() = d_a1 * cache.input.transpose();
  g_b1 = d_a1.rowwise().sum();
  return grad;
}

Vector Mlp::initialize(Rng& rng) const {
  const Layout l = layout_of(shape_);
  Vector p(shape_.param_count());
  auto fill = [&](Eigen::Index begin, Eigen::Index end, double fan_in) {
    const double bound = 1.0 / std::sqrt(fan_in);
    for (Eigen::Index k = begin; k < end; ++k) p(k) = rng.uniform(-bound, bound);
  };
  fill(l.w1, l.w2, shape_.input);
  fill(l.w2, l.w3, shape_.hidden);
  fill(l.w3, p.size(), shape_.hidden);
  return p;
}

// ---------------------------------------------------------------------------------------------
// eps-network

EpsNetwork::EpsNetwork(int frames, int dim, const TrainConfig& config, NoiseSchedule schedule)
    : frames_(frames),
      dim_(dim),
      time_features_(config.time_features),
      motion_(config.motion_conditioning),
      sigma_data_(config.sigma_data),
      schedule_(schedule),
      mlp_(MlpShape{frames * dim + dim + config.time_features + (config.motion_conditioning ? 1 : 0), config.hidden,
                    frames * dim}) {}

Vector EpsNetwork::time_features(double t) const {
  Vector f = Vector::Zero(time_features_);
  f(0) = t;
  for (int k = 1; 2 * k < time_features_; ++k) {
    f(2 * k - 1) = std::sin(2.0 * std::numbers::pi * k * t);
    f(2 * k) = std::cos(2.0 * std::numbers::pi * k * t);
  }
  return f;
}

EpsNetwork::Preconditioning EpsNetwork::preconditioning(double t) const {
  const auto [alpha, sigma] = alpha_sigma(schedule_, t);
  const double s = sigma_data_;
  const double c_in = 1.0 / std::sqrt(alpha * alpha * s * s + sigma * sigma);
  return {c_in, sigma * c_in * c_in, alpha * s * c_in};
}

Eigen::MatrixXd EpsNetwork::build_inputs(const std::vector<NoisedItem>& items) const {
  const Eigen::Index flat = static_cast<Eigen::Index>(frames_) * dim_;
  Eigen::MatrixXd in(mlp_.shape().input, static_cast<Eigen::Index>(items.size()));
  for (std::size_t b = 0; b < items.size(); ++b) {
    const NoisedItem& it = items[b];
    if (it.xt.rows() != frames_ || it.xt.cols() != dim_) throw ShapeError("eps-network: video shape mismatch");
    if (it.y.size() != dim_) throw ShapeError("eps-network: condition must have length dim");
    const auto col = static_cast<Eigen::Index>(b);
    const double c_in = preconditioning(it.t).c_in;
    in.col(col).head(flat) = c_in * flatten(it.xt);
    in.col(col).segment(flat, dim_) = it.y;
    in.col(col).segment(flat + dim_, time_features_) = time_features(it.t);
    if (motion_) in(in.rows() - 1, col) = it.motion;
  }
  return in;
}

Eigen::MatrixXd EpsNetwork::predict(const Vector& params, const std::vector<NoisedItem>& items,
                                    Mlp::Cache* cache) const {
  Eigen::MatrixXd out = mlp_.forward(params, build_inputs(items), cache);
  for (std::size_t b = 0; b < items.size(); ++b) {
    const auto col = static_cast<Eigen::Index>(b);
    const Preconditioning p = preconditioning(items[b].t);
    out.col(col) = p.c_skip * flatten(items[b].xt) + p.c_out * out.col(col);
  }
  return out;
}

Video EpsNetwork::predict_eps(const Vector& params, const Video& xt, const Vector& y, double t, double motion) const {
  std::vector<NoisedItem> one(1);
  one[0].xt = xt;
  one[0].y = y;
  one[0].t = t;
  one[0].motion = motion;
  return unflatten(predict(params, one).col(0), frames_, dim_);
}

// ---------------------------------------------------------------------------------------------
// batches and loss

std::vector<DataItem> draw_data(const GaussianWorld& world, const TrainConfig& config, int count, Rng& rng) {
  std::vector<DataItem> out(static_cast<std::size_t>(count));
  for (DataItem& item : out) {
    if (config.motion_conditioning) {
      GaussianWorld varied = world;
      varied.s_w = rng.uniform(config.motion_s_w_min, config.motion_s_w_max);
      item.x0 = sample_video(varied, rng);
      item.motion = expected_motion_score(varied);
    } else {
      item.x0 = sample_video(world, rng);
    }
    const Eigen::Index frame =
        world.random_cond_frame ? static_cast<Eigen::Index>(rng.index(static_cast<std::uint64_t>(world.frames))) : 0;
    item.y0 = item.x0.row(frame).transpose();
  }
  return out;
}

double training_time(const NoiseSchedule& schedule, const TrainConfig& config, double u, double z) {
  if (config.noise_sampler == NoiseLevelSampler::UniformT) return kMinTrainTime + (1.0 - kMinTrainTime) * u;
  const double ratio = std::exp(config.p_mean + config.p_std * z);
  return std::clamp(time_for_noise_ratio(schedule, ratio), kMinTrainTime, 1.0);
}

std::vector<NoisedItem> prepare_batch(const std::vector<DataItem>& data, const NoiseSchedule& schedule,
                                      const TrainConfig& config, Rng& rng) {
  std::vector<NoisedItem> out;
  out.reserve(data.size());
  for (const DataItem& item : data) {
    NoisedItem n;
    const double u = rng.uniform();
    const double zt = rng.normal();
    n.t = training_time(schedule, config, u, zt);
    const double z_beta = rng.normal();
    const Vector eps_y = rng.normal_vector(item.y0.size());
    n.eps = rng.normal_matrix(item.x0.rows(), item.x0.cols());
    n.xt = perturb_with(schedule, item.x0, n.t, n.eps);
    n.motion = item.motion;

    double beta = 0.0;
    CorruptionVariant variant = CorruptionVariant::Additive;
    switch (config.mode) {
      case TrainMode::Naive: break;
      case TrainMode::TimeNoise:
        beta = beta_from_standard_normal(config.timenoise, n.t, z_beta);
        variant = config.timenoise.variant;
        break;
      case TrainMode::CDMFixed: beta = config.cdm_beta; break;
      case TrainMode::ConstantBeta: beta = constant_beta(config.timenoise, n.t); break;
    }
    if (config.mode != TrainMode::Naive && config.force_condition_noise) beta = *config.force_condition_noise;
    n.y = config.mode == TrainMode::Naive ? item.y0 : corrupt_with(variant, item.y0, beta, eps_y).y;
    out.push_back(std::move(n));
  }
  return out;
}

RegressionLoss regression_loss(const Eigen::MatrixXd& predicted, const Eigen::MatrixXd& target) {
  if (predicted.rows() != target.rows() || predicted.cols() != target.cols())
    throw ShapeError("regression loss: shape mismatch");
  const double n = static_cast<double>(predicted.size());
  const Eigen::MatrixXd diff = predicted - target;
  return {diff.squaredNorm() / n, (2.0 / n) * diff};
}

namespace {

Eigen::MatrixXd targets_of(const std::vector<NoisedItem>& batch) {
  Eigen::MatrixXd target(batch.front().eps.size(), static_cast<Eigen::Index>(batch.size()));
  for (std::size_t b = 0; b < batch.size(); ++b) target.col(static_cast<Eigen::Index>(b)) = flatten(batch[b].eps);
  return target;
}

}  // namespace

LossGrad loss_and_gradient(const EpsNetwork& net, const Vector& params, const std::vector<NoisedItem>& batch) {
  if (batch.empty()) throw ShapeError("loss_and_gradient: empty batch");
  Mlp::Cache cache;
  const Eigen::MatrixXd pred = net.predict(params, batch, &cache);
  RegressionLoss rl = regression_loss(pred, targets_of(batch));
  for (std::size_t b = 0; b < batch.size(); ++b)
    rl.d_predicted.col(static_cast<Eigen::Index>(b)) *= net.preconditioning(batch[b].t).c_out;
  return {rl.loss, net.mlp().backward(params, cache, rl.d_predicted)};
}

LossGrad loss_and_gradient(const EpsNetwork& net, const Vector& params, const std::vector<DataItem>& data,
                           const NoiseSchedule& schedule, const TrainConfig& config, Rng& rng) {
  return loss_and_gradient(net, params, prepare_batch(data, schedule, config, rng));
}

double loss_only(const EpsNetwork& net, const Vector& params, const std::vector<NoisedItem>& batch) {
  if (batch.empty()) throw ShapeError("loss: empty batch");
  return regression_loss(net.predict(params, batch), targets_of(batch)).loss;
}

// ---------------------------------------------------------------------------------------------
// optimizer and training loop

Adam::Adam(Eigen::Index size, double learning_rate, double beta1, double beta2, double epsilon)
    : lr_(learning_rate),
      beta1_(beta1),
      beta2_(beta2),
      epsilon_(epsilon),
      m_(Vector::Zero(size)),
      v_(Vector::Zero(size)) {}

void Adam::step(Vector& params, const Vector& grad) {
  ++step_;
  m_ = beta1_ * m_ + (1.0 - beta1_) * grad;
  v_ = beta2_ * v_ + (1.0 - beta2_) * grad.cwiseAbs2();
  const double c1 = 1.0 - std::pow(beta1_, static_cast<double>(step_));
  const double c2 = 1.0 - std::pow(beta2_, static_cast<double>(step_));
  params.array() -= lr_ * (m_.array() / c1) / ((v_.array() / c2).sqrt() + epsilon_);
}

Checkpoint train(const GaussianWorld& world, const NoiseSchedule& schedule, const TrainConfig& config) {
  world.validate();
  schedule.validate();
  config.validate();

  const EpsNetwork net(world.frames, world.dim, config, schedule);
  Rng init_rng(derive_seed(config.seed, 0));
  Vector params = net.mlp().initialize(init_rng);

  Rng eval_rng(derive_seed(config.seed, 1));
  const std::vector<NoisedItem> eval_batch =
      prepare_batch(draw_data(world, config, config.eval_batch, eval_rng), schedule, config, eval_rng);

  Checkpoint ckpt;
  ckpt.world = world;
  ckpt.schedule = schedule;
  ckpt.train = config;
  ckpt.train.force_condition_noise.reset();
  ckpt.seed = config.seed;
  ckpt.shape = net.mlp().shape();
  ckpt.initial_loss = loss_only(net, params, eval_batch);

  Adam adam(params.size(), config.learning_rate);
  Rng rng(derive_seed(config.seed, 2));
  for (int step = 0; step < config.steps; ++step) {
    const auto data = draw_data(world, config, config.batch_size, rng);
    const LossGrad lg = loss_and_gradient(net, params, data, schedule, config, rng);
    if (!std::isfinite(lg.loss) || !lg.grad.allFinite())
      throw NumericalError("training diverged at step " + std::to_string(step) + " (loss " + std::to_string(lg.loss) +
                           ")");
    adam.step(params, lg.grad);
  }

  ckpt.parameters = std::move(params);
  ckpt.final_loss = loss_only(net, ckpt.parameters, eval_batch);
  return ckpt;
}

// ---------------------------------------------------------------------------------------------

MlpDenoiser::MlpDenoiser(const Checkpoint& checkpoint)
    : Denoiser(checkpoint.schedule),
      net_(checkpoint.world.frames, checkpoint.world.dim, checkpoint.train, checkpoint.schedule),
      params_(checkpoint.parameters) {
  if (!(net_.mlp().shape() == checkpoint.shape)) throw ConfigError("checkpoint: layer shapes do not match config");
  if (params_.size() != checkpoint.shape.param_count()) throw ConfigError("checkpoint: wrong parameter count");
}

Video MlpDenoiser::predict_eps(const Video& xt, const Vector& y, double t) const {
  return net_.predict_eps(params_, xt, y, t, motion_target_);
}

Video MlpDenoiser::predict_x0(const Video& xt, const Vector& y, double t) const {
  return one_step_from_eps(schedule_, xt, predict_eps(xt, y, t), t);
}

}  // namespace leaklab
