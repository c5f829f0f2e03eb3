#include <pybind11/eigen.h>
#include <pybind11/functional.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "leaklab/analytic_init.hpp"
#include "leaklab/config.hpp"
#include "leaklab/denoiser.hpp"
#include "leaklab/diagnostics.hpp"
#include "leaklab/errors.hpp"
#include "leaklab/sampler.hpp"
#include "leaklab/train.hpp"

namespace py = pybind11;
using namespace leaklab;

namespace {

std::vector<Video> draw(const GaussianWorld& w, int n, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<Video> out;
  for (int i = 0; i < n; ++i) out.push_back(sample_video(w, rng));
  return out;
}

std::unique_ptr<Denoiser> reference_denoiser(const GaussianWorld& w, const NoiseSchedule& s, double lambda_max,
                                             double power) {
  if (lambda_max == 0.0) return std::make_unique<ExactDenoiser>(w, s, true);
  return std::make_unique<LeakyDenoiser>(w, s, lambda_max, power);
}

py::dict report_to_dict(const OptimalityReport& r) {
  py::list kls;
  for (const GridCell& c : r.cells) kls.append(c.kl);
  py::dict d;
  d["mu_p"] = r.optimum.mu_p;
  d["sigma_p2"] = r.optimum.sigma_p2;
  d["kl_optimum"] = r.kl_optimum;
  d["kl_values"] = kls;
  d["min_margin"] = r.min_margin;
  d["variance_formula_error"] = r.variance_formula_error;
  d["passed"] = r.passed;
  return d;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Gaussian toy-video laboratory for conditional image leakage.";

  py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);
  py::register_exception<NumericalError>(m, "NumericalError", PyExc_ArithmeticError);
  py::register_exception<DomainError>(m, "DomainError", PyExc_ValueError);
  py::register_exception<ShapeError>(m, "ShapeError", PyExc_ValueError);
  py::register_exception<InsufficientDataError>(m, "InsufficientDataError", PyExc_ValueError);

  py::enum_<ScheduleKind>(m, "ScheduleKind").value("VP", ScheduleKind::VP).value("VE", ScheduleKind::VE);

  py::class_<NoiseSchedule>(m, "NoiseSchedule")
      .def_static("vp", &NoiseSchedule::vp, py::arg("beta_min") = 0.1, py::arg("beta_max") = 20.0)
      .def_static("ve", &NoiseSchedule::ve, py::arg("sigma_min") = 0.002, py::arg("sigma_max") = 700.0)
      .def_readonly("kind", &NoiseSchedule::kind)
      .def("alpha_sigma",
           [](const NoiseSchedule& s, double t) {
             const auto c = alpha_sigma(s, t);
             return py::make_tuple(c.alpha, c.sigma);
           })
      .def("time_for_noise_ratio", [](const NoiseSchedule& s, double r) { return time_for_noise_ratio(s, r); });

  py::class_<GaussianWorld>(m, "GaussianWorld")
      .def(py::init<>())
      .def(py::init([](int frames, int dim, double m0, double s0, double drift, double s_w) {
             GaussianWorld w;
             w.frames = frames;
             w.dim = dim;
             w.m0 = Vector::Constant(dim, m0);
             w.s0 = s0;
             w.drift = Vector::Constant(dim, drift);
             w.s_w = s_w;
             w.validate();
             return w;
           }),
           py::arg("frames") = 8, py::arg("dim") = 4, py::arg("m0") = 0.0, py::arg("s0") = 1.0, py::arg("drift") = 0.2,
           py::arg("s_w") = 0.5)
      .def_readonly("frames", &GaussianWorld::frames)
      .def_readonly("dim", &GaussianWorld::dim)
      .def_readonly("s0", &GaussianWorld::s0)
      .def_readonly("s_w", &GaussianWorld::s_w)
      .def("sample", &draw, py::arg("n"), py::arg("seed"))
      .def("frame_covariance", [](const GaussianWorld& w) { return prior_moments(w).frame_cov; })
      .def("conditional_mean", [](const GaussianWorld& w, const Vector& y0) {
        return conditional_prior_moments(w, y0).mean;
      })
      .def("expected_motion", &expected_motion_score);

  // timenoise
  m.def("mu_of_t", [](double beta_m, double a, double t) { return mu_of_t({beta_m, a}, t); });
  m.def("timenoise_pdf", [](double beta_m, double a, double t, double beta) { return pdf({beta_m, a}, t, beta); });
  m.def(
      "sample_beta",
      [](double beta_m, double a, double t, int n, std::uint64_t seed) {
        Rng rng(seed);
        std::vector<double> out(static_cast<std::size_t>(n));
        for (double& b : out) b = sample_beta({beta_m, a}, t, rng);
        return out;
      },
      py::arg("beta_m"), py::arg("a"), py::arg("t"), py::arg("n"), py::arg("seed"));
  m.def("constant_beta", [](double beta_m, double a, double t) { return constant_beta({beta_m, a}, t); });

  // analytic init
  m.def(
      "estimate_moments",
      [](const std::vector<Video>& videos) {
        const DataMoments dm = estimate_moments(videos);
        return py::make_tuple(dm.mean, dm.avg_var);
      },
      "Method-of-moments estimate: (flattened mean, average per-coordinate variance).");
  m.def(
      "optimal_init",
      [](const Vector& mean, double avg_var, const NoiseSchedule& s, double M) {
        const InitDistribution p = optimal_init({mean, avg_var, 2}, s, M);
        return py::make_tuple(p.mu_p, p.sigma_p2);
      },
      py::arg("mean"), py::arg("avg_var"), py::arg("schedule"), py::arg("M"));
  m.def(
      "gaussian_kl",
      [](const Vector& mu_q, const Eigen::MatrixXd& sigma_q, const Vector& mu_p, double sigma_p2) {
        return gaussian_kl(mu_q, sigma_q, {mu_p, sigma_p2, 1.0});
      },
      py::arg("mu_q"), py::arg("sigma_q"), py::arg("mu_p"), py::arg("sigma_p2"));
  m.def(
      "verify_optimality",
      [](const GaussianWorld& w, const NoiseSchedule& s, double M) {
        const FlatGaussian q = flat_marginal(w, s, M);
        return report_to_dict(
            verify_optimality(world_moments(w), q.mean, q.cov, s, M, PerturbationGrid::standard(w.flat_dim())));
      },
      py::arg("world"), py::arg("schedule"), py::arg("M"));

  // sampling and diagnostics with the closed-form reference denoisers
  m.def("motion_score", &motion_score);
  m.def(
      "sample",
      [](const GaussianWorld& w, const NoiseSchedule& s, const std::vector<Vector>& y0s, double M, int steps,
         bool analytic, double lambda_max, double power, std::uint64_t seed) {
        SamplerConfig c;
        c.M = M;
        c.steps = steps;
        if (analytic) {
          c.init = InitKind::Analytic;
          c.analytic = optimal_init(world_moments(w), s, M);
        }
        c.validate();
        return sample_chains(*reference_denoiser(w, s, lambda_max, power), y0s, w.frames, c, seed);
      },
      py::arg("world"), py::arg("schedule"), py::arg("y0s"), py::arg("M") = 1.0, py::arg("steps") = 50,
      py::arg("analytic") = false, py::arg("lambda_max") = 0.0, py::arg("power") = 4.0, py::arg("seed") = 0,
      "DDIM sampling; lambda_max = 0 selects the exact conditional denoiser, otherwise the leaky one.");
  m.def(
      "leakage_curve",
      [](const GaussianWorld& w, const NoiseSchedule& s, const std::vector<double>& t_grid, int eval_size,
         double lambda_max, double power, std::uint64_t seed) {
        const auto eval = draw(w, eval_size, derive_seed(seed, 0));
        return leakage_curve(*reference_denoiser(w, s, lambda_max, power), eval, t_grid, derive_seed(seed, 1)).ratio;
      },
      py::arg("world"), py::arg("schedule"), py::arg("t_grid"), py::arg("eval_size") = 256,
      py::arg("lambda_max") = 0.8, py::arg("power") = 4.0, py::arg("seed") = 0);

  // training, driven by the same JSON documents as the CLI
  m.def(
      "train",
      [](const std::string& config_json, const std::string& mode) {
        ExperimentConfig cfg = config_from_json(Json::parse(config_json));
        if (!mode.empty()) cfg.train.mode = train_mode_from_string(mode);
        Checkpoint ck;
        {
          py::gil_scoped_release release;
          ck = train(cfg.world, cfg.schedule, cfg.train);
        }
        return checkpoint_to_json(ck).dump();
      },
      py::arg("config_json") = "{}", py::arg("mode") = "",
      "Trains an eps-network; returns the checkpoint as a JSON string.");
  m.def(
      "checkpoint_predict_eps",
      [](const std::string& checkpoint_json, const Video& xt, const Vector& y, double t) {
        return MlpDenoiser(checkpoint_from_json(Json::parse(checkpoint_json))).predict_eps(xt, y, t);
      },
      py::arg("checkpoint_json"), py::arg("xt"), py::arg("y"), py::arg("t"));
}
