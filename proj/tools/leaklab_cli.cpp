// leaklab: command-line front end for the toy-video leakage experiments.

#include <CLI11.hpp>
#include <fmt/format.h>

#include <filesystem>
#include <iostream>
#include <memory>
#include <optional>
#include <string>

#include "leaklab/analytic_init.hpp"
#include "leaklab/config.hpp"
#include "leaklab/denoiser.hpp"
#include "leaklab/diagnostics.hpp"
#include "leaklab/errors.hpp"
#include "leaklab/io.hpp"
#include "leaklab/sampler.hpp"
#include "leaklab/train.hpp"

namespace {

using namespace leaklab;

constexpr int kExitConfig = 2;
constexpr int kExitNumerical = 3;
constexpr int kExitCheckFailed = 4;

int report_error(const std::string& type, const std::string& message, int code) {
  std::cerr << Json{{"error", {{"type", type}, {"message", message}, {"exit_code", code}}}}.dump() << '\n';
  return code;
}

// Relative output paths land in the config's output directory.
std::string resolve_output(const ExperimentConfig& cfg, const std::string& out) {
  const std::filesystem::path p(out);
  if (p.is_absolute() || cfg.output_dir.empty() || cfg.output_dir == ".") return out;
  std::filesystem::create_directories(cfg.output_dir);
  return (std::filesystem::path(cfg.output_dir) / p).string();
}

bool starts_with(const std::string& s, const std::string& prefix) { return s.rfind(prefix, 0) == 0; }

std::unique_ptr<Denoiser> make_denoiser(const std::string& choice, const ExperimentConfig& cfg) {
  if (choice == "exact") return std::make_unique<ExactDenoiser>(cfg.world, cfg.schedule, true);
  if (choice == "leaky")
    return std::make_unique<LeakyDenoiser>(cfg.world, cfg.schedule, cfg.diagnostics.lambda_max,
                                           cfg.diagnostics.leak_power);
  if (starts_with(choice, "ckpt:")) {
    const Checkpoint ckpt = load_checkpoint(choice.substr(5));
    if (!(ckpt.world == cfg.world) || !(ckpt.schedule == cfg.schedule))
      throw ConfigError("checkpoint world/schedule differ from the config");
    return std::make_unique<MlpDenoiser>(ckpt);
  }
  throw ConfigError("--denoiser must be exact, leaky or ckpt:PATH");
}

std::vector<Video> world_samples(const GaussianWorld& world, int n, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<Video> out;
  out.reserve(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) out.push_back(sample_video(world, rng));
  return out;
}

// Stream indices under the config seed, one per purpose.
constexpr std::uint64_t kStreamData = 11;
constexpr std::uint64_t kStreamChains = 12;
constexpr std::uint64_t kStreamMoments = 13;
constexpr std::uint64_t kStreamEval = 14;
constexpr std::uint64_t kStreamDiagnostics = 15;

DataMoments estimated_moments(const ExperimentConfig& cfg) {
  const auto samples =
      world_samples(cfg.world, cfg.diagnostics.moment_samples, derive_seed(cfg.seed, kStreamMoments));
  return estimate_moments(samples);
}

// ---------------------------------------------------------------------------------------------

int cmd_world_sample(const ExperimentConfig& cfg, int n, const std::string& out) {
  if (n < 1) throw ConfigError("--n must be >= 1");
  write_videos_csv(out, world_samples(cfg.world, n, derive_seed(cfg.seed, kStreamData)));
  write_manifest(out, "world-sample", cfg);
  return 0;
}

int cmd_estimate_init(const ExperimentConfig& cfg, const std::string& data, double M, const std::string& out) {
  const auto samples = read_videos_csv(data, cfg.world.frames, cfg.world.dim);
  const DataMoments moments = estimate_moments(samples);
  const InitDistribution init = optimal_init(moments, cfg.schedule, M);
  write_json(out, init_to_json(init, moments));
  write_manifest(out, "estimate-init", cfg);
  return 0;
}

int cmd_prop1_check(const ExperimentConfig& cfg, double M, const std::string& out) {
  const FlatGaussian q = flat_marginal(cfg.world, cfg.schedule, M);
  const PerturbationGrid grid = PerturbationGrid::standard(cfg.world.flat_dim());
  const OptimalityReport r = verify_optimality(world_moments(cfg.world), q.mean, q.cov, cfg.schedule, M, grid);

  Json cells = Json::array(), kls = Json::array();
  for (const GridCell& c : r.cells) {
    cells.push_back({{"kappa", c.kappa}, {"shift", c.shift}});
    kls.push_back(c.kl);
  }
  Json mu = Json::array();
  for (Eigen::Index i = 0; i < r.optimum.mu_p.size(); ++i) mu.push_back(r.optimum.mu_p(i));
  const Json report{{"M", M},
                    {"optimum", {{"mu_p", mu}, {"sigma_p2", r.optimum.sigma_p2}, {"kl", r.kl_optimum}}},
                    {"grid", cells},
                    {"kl_values", kls},
                    {"min_margin", r.min_margin},
                    {"variance_formula_error", r.variance_formula_error},
                    {"mean_formula_error", r.mean_formula_error},
                    {"passed", r.passed}};
  write_json(out, report);
  write_manifest(out, "prop1-check", cfg);
  return r.passed ? 0 : kExitCheckFailed;
}

int cmd_train(ExperimentConfig cfg, const std::optional<std::string>& mode, const std::string& out) {
  if (mode) cfg.train.mode = train_mode_from_string(*mode);
  const Checkpoint ckpt = train(cfg.world, cfg.schedule, cfg.train);
  save_checkpoint(ckpt, out);
  write_manifest(out, "train", cfg);
  return 0;
}

SamplerConfig sampler_config(const ExperimentConfig& cfg, const std::string& init_spec) {
  SamplerConfig sc;
  sc.M = cfg.sampler.M;
  sc.steps = cfg.sampler.steps;
  sc.condition = cfg.sampler.condition;
  sc.fixed_noise = cfg.sampler.fixed_noise;
  if (init_spec == "standard") {
    sc.init = InitKind::Standard;
  } else if (init_spec == "analytic") {
    sc.init = InitKind::Analytic;
    sc.analytic = optimal_init(estimated_moments(cfg), cfg.schedule, sc.M);
  } else if (starts_with(init_spec, "analytic:")) {
    sc.init = InitKind::Analytic;
    sc.analytic = init_from_json(read_json(init_spec.substr(9)));
    if (sc.analytic->M != sc.M)
      throw ConfigError(fmt::format("init file was computed for M = {} but sampling starts at M = {}",
                                    sc.analytic->M, sc.M));
    if (sc.analytic->mu_p.size() != cfg.world.flat_dim()) throw ConfigError("init file dimension mismatch");
  } else {
    throw ConfigError("--init must be standard, analytic or analytic:PATH");
  }
  sc.validate();
  return sc;
}

int cmd_sample(ExperimentConfig cfg, const std::string& denoiser_spec, const std::string& init_spec,
               const std::optional<double>& M, const std::optional<int>& steps, const std::optional<int>& n,
               const std::string& out) {
  if (M) cfg.sampler.M = *M;
  if (steps) cfg.sampler.steps = *steps;
  if (n) cfg.sampler.samples = *n;
  if (cfg.sampler.steps < 1) throw ConfigError("sampler steps must be >= 1");
  if (cfg.sampler.samples < 1) throw ConfigError("--n must be >= 1");
  if (!(cfg.sampler.M > 0.0 && cfg.sampler.M <= 1.0)) throw ConfigError("--M must lie in (0, 1]");
  const SamplerConfig sc = sampler_config(cfg, init_spec);
  const auto denoiser = make_denoiser(denoiser_spec, cfg);

  std::vector<Vector> y0s;
  for (const Video& v : world_samples(cfg.world, cfg.sampler.samples, derive_seed(cfg.seed, kStreamData)))
    y0s.push_back(v.row(0).transpose());
  const std::vector<Video> videos =
      sample_chains(*denoiser, y0s, cfg.world.frames, sc, derive_seed(cfg.seed, kStreamChains));
  write_videos_csv(out, videos);

  double s = 0.0, s2 = 0.0;
  for (const Video& v : videos) {
    const double m = motion_score(v);
    s += m;
    s2 += m * m;
  }
  const double count = static_cast<double>(videos.size());
  const double mean = s / count;
  const Json summary{{"n", videos.size()},
                     {"mean_motion", mean},
                     {"motion_std", std::sqrt(std::max(0.0, s2 / count - mean * mean))},
                     {"denoiser", denoiser_spec},
                     {"init", init_spec},
                     {"config", config_to_json(cfg)}};
  write_json(out + ".summary.json", summary);
  write_manifest(out, "sample", cfg);
  return 0;
}

int cmd_diagnose(const ExperimentConfig& cfg, const std::string& which, const std::string& denoiser_spec,
                 const std::string& out) {
  const DiagnosticsSection& d = cfg.diagnostics;
  const std::uint64_t seed = derive_seed(cfg.seed, kStreamDiagnostics);

  if (which == "leakage") {
    const auto eval = world_samples(cfg.world, d.eval_size, derive_seed(cfg.seed, kStreamEval));
    const LeakageCurve curve = denoiser_spec == "oracle"
                                   ? leakage_curve_oracle(cfg.schedule, eval, d.t_grid, seed)
                                   : leakage_curve(*make_denoiser(denoiser_spec, cfg), eval, d.t_grid, seed);
    std::vector<std::vector<double>> rows;
    for (std::size_t i = 0; i < curve.t.size(); ++i) rows.push_back({curve.t[i], curve.ratio[i]});
    write_csv(out, {"t", "ratio"}, rows);
  } else if (which == "motion-sweep") {
    SweepSettings settings;
    settings.sampler = sampler_config(cfg, "standard");
    settings.samples = d.sweep_samples;
    settings.seed = seed;
    std::vector<SweepRow> rows;
    if (denoiser_spec == "exact" || denoiser_spec == "leaky") {
      const ExperimentConfig base = cfg;
      rows = motion_sweep(
          [&](const GaussianWorld& w) {
            ExperimentConfig c = base;
            c.world = w;
            return make_denoiser(denoiser_spec, c);
          },
          cfg.world, d.motion_targets, settings);
    } else {
      auto denoiser = make_denoiser(denoiser_spec, cfg);
      auto* mlp = dynamic_cast<MlpDenoiser*>(denoiser.get());
      if (mlp && mlp->motion_conditioned())
        rows = motion_sweep_conditioned(*mlp, cfg.world, d.motion_targets, settings);
      else
        rows.push_back(motion_row(*denoiser, cfg.world, expected_motion_score(cfg.world), settings));
    }
    std::vector<std::vector<double>> table;
    for (const SweepRow& r : rows) table.push_back({r.input_ms, r.output_ms_mean, r.output_ms_std, r.error});
    write_csv(out, {"input_ms", "output_ms_mean", "output_ms_std", "error"}, table);
  } else if (which == "init-ablation") {
    AblationSettings settings;
    settings.M_grid = d.M_grid;
    settings.steps = cfg.sampler.steps;
    settings.samples = d.ablation_samples;
    settings.y0 = d.y0;
    settings.seed = seed;
    const auto rows =
        init_ablation(cfg.world, cfg.schedule, estimated_moments(cfg), *make_denoiser(denoiser_spec, cfg), settings);
    std::vector<std::vector<double>> table;
    for (const AblationRow& r : rows)
      table.push_back({r.M, r.init == InitKind::Standard ? 0.0 : 1.0, r.kl, r.mean_ms, r.moment_error.mean_error,
                       r.moment_error.cov_error});
    write_csv(out, {"M", "analytic", "kl", "mean_ms", "mean_error", "cov_error"}, table);
  } else {
    throw ConfigError("diagnose expects leakage, motion-sweep or init-ablation");
  }
  write_manifest(out, "diagnose " + which, cfg);
  return 0;
}

int cmd_timenoise_pdf(const ExperimentConfig& cfg, const std::string& out) {
  const TimeNoiseParams& p = cfg.timenoise;
  std::vector<std::vector<double>> rows;
  constexpr int kLevels = 200;
  for (double t : cfg.diagnostics.t_grid)
    for (int i = 1; i < kLevels; ++i) {
      const double beta = p.beta_m * i / kLevels;
      rows.push_back({t, beta, pdf(p, t, beta)});
    }
  write_csv(out, {"t", "beta_s", "density"}, rows);
  write_manifest(out, "timenoise-pdf", cfg);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Toy-video laboratory for conditional image leakage: Analytic-Init and TimeNoise"};
  app.require_subcommand(1);

  std::string config_path, out, data, mode_str, denoiser = "leaky", init = "standard", which;
  double M = 1.0;
  int n = 1000;
  std::optional<std::string> mode;
  std::optional<double> M_opt;
  std::optional<int> steps_opt, n_opt;

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", config_path, "experiment config (JSON)")->required();
    sub->add_option("--out", out, "output path")->required();
  };

  auto* world_sample = app.add_subcommand("world-sample", "write sampled ground-truth videos as CSV");
  add_common(world_sample);
  world_sample->add_option("--n", n, "number of videos")->required();

  auto* estimate = app.add_subcommand("estimate-init", "method-of-moments estimate of the optimal initial Gaussian");
  add_common(estimate);
  estimate->add_option("--data", data, "videos CSV")->required();
  estimate->add_option("--M", M, "start time")->required();

  auto* prop1 = app.add_subcommand("prop1-check", "verify KL optimality of the analytic initial distribution");
  add_common(prop1);
  prop1->add_option("--M", M_opt, "start time (default: sampler.M)");

  auto* train_cmd = app.add_subcommand("train", "train an eps-prediction denoiser");
  add_common(train_cmd);
  train_cmd->add_option("--mode", mode, "naive|timenoise|cdm|constant (default: train.mode)");

  auto* sample_cmd = app.add_subcommand("sample", "generate videos with the deterministic sampler");
  add_common(sample_cmd);
  sample_cmd->add_option("--denoiser", denoiser, "exact|leaky|ckpt:PATH");
  sample_cmd->add_option("--init", init, "standard|analytic|analytic:PATH");
  sample_cmd->add_option("--M", M_opt, "start time");
  sample_cmd->add_option("--steps", steps_opt, "number of sampler steps");
  sample_cmd->add_option("--n", n_opt, "number of chains");

  auto* diagnose = app.add_subcommand("diagnose", "leakage curve, motion sweep or init ablation");
  add_common(diagnose);
  diagnose->add_option("experiment", which, "leakage|motion-sweep|init-ablation")->required();
  diagnose->add_option("--denoiser", denoiser, "exact|leaky|oracle|ckpt:PATH");

  auto* pdf_cmd = app.add_subcommand("timenoise-pdf", "tabulate the conditioning-noise density");
  add_common(pdf_cmd);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    return report_error("config", e.what(), kExitConfig);
  }

  try {
    const ExperimentConfig cfg = load_config(config_path);
    out = resolve_output(cfg, out);
    if (*world_sample) return cmd_world_sample(cfg, n, out);
    if (*estimate) return cmd_estimate_init(cfg, data, M, out);
    if (*prop1) return cmd_prop1_check(cfg, M_opt.value_or(cfg.sampler.M), out);
    if (*train_cmd) return cmd_train(cfg, mode, out);
    if (*sample_cmd) return cmd_sample(cfg, denoiser, init, M_opt, steps_opt, n_opt, out);
    if (*diagnose) return cmd_diagnose(cfg, which, denoiser, out);
    if (*pdf_cmd) return cmd_timenoise_pdf(cfg, out);
  } catch (const NumericalError& e) {
    return report_error("numerical", e.what(), kExitNumerical);
  } catch (const ConfigError& e) {
    return report_error("config", e.what(), kExitConfig);
  } catch (const std::invalid_argument& e) {
    return report_error("config", e.what(), kExitConfig);
  } catch (const std::domain_error& e) {
    return report_error("config", e.what(), kExitConfig);
  } catch (const std::exception& e) {
    return report_error("internal", e.what(), 1);
  }
  return 0;
}
