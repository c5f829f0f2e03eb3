#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <vector>

#include "leaklab/errors.hpp"
#include "leaklab/timenoise.hpp"

using namespace leaklab;

namespace {

double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::numbers::sqrt2); }

double ks_statistic(std::vector<double> xs, double mu) {
  std::sort(xs.begin(), xs.end());
  const double n = static_cast<double>(xs.size());
  double d = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const double f = normal_cdf(xs[i] - mu);
    d = std::max({d, (i + 1) / n - f, f - i / n});
  }
  return d;
}

// Midpoint rule over (0, beta_m).
template <class F>
double integrate(const TimeNoiseParams& p, F&& f, int n = 100000) {
  const double h = p.beta_m / n;
  double acc = 0.0;
  for (int i = 0; i < n; ++i) acc += f((i + 0.5) * h);
  return acc * h;
}

}  // namespace

TEST_CASE("mu(t) examples") {
  CHECK(mu_of_t({100, 1}, 0.5) == doctest::Approx(0.0));
  CHECK(mu_of_t({100, 5}, 0.5) == doctest::Approx(-0.9375));
  CHECK(mu_of_t({100, 5}, 1.0) == 1.0);
  CHECK(mu_of_t({100, 5}, 0.0) == -1.0);
}

TEST_CASE("pdf at the logit midpoint") {
  const TimeNoiseParams p{100.0, 5.0};
  const double t = std::pow(0.5, 1.0 / 5.0);  // mu(t) = 0
  CHECK(pdf(p, t, 50.0) == doctest::Approx(4.0 / (100.0 * std::sqrt(2.0 * std::numbers::pi))).epsilon(1e-12));
}

TEST_CASE("pdf is normalized and vanishes at the edges") {
  for (double bm : {1.0, 3.0, 25.0, 100.0})
    for (double a : {0.5, 1.0, 5.0})
      for (double t : {0.1, 0.5, 0.9}) {
        const TimeNoiseParams p{bm, a};
        const double z = integrate(p, [&](double b) { return pdf(p, t, b); });
        CHECK(std::abs(z - 1.0) <= 1e-4);
        CHECK(pdf(p, t, 1e-9 * bm) < 1e-12);
        CHECK(pdf(p, t, bm * (1 - 1e-9)) < 1e-12);
      }
  CHECK_THROWS_AS(pdf({100, 5}, 0.5, 0.0), DomainError);
  CHECK_THROWS_AS(pdf({100, 5}, 0.5, 100.0), DomainError);
}

TEST_CASE("cdf agrees with the integrated pdf and is ordered in t") {
  const TimeNoiseParams p{25.0, 5.0};
  for (double b : {1.0, 5.0, 12.5, 20.0}) {
    const double h = b / 20000;
    double acc = 0.0;
    for (int i = 0; i < 20000; ++i) acc += pdf(p, 0.7, (i + 0.5) * h);
    CHECK(cdf(p, 0.7, b) == doctest::Approx(acc * h).epsilon(1e-6));
    CHECK(cdf(p, 0.9, b) < cdf(p, 0.5, b));
  }
}

TEST_CASE("sampled logits follow the defining normal") {
  const TimeNoiseParams p{100.0, 5.0};
  Rng rng(11);
  std::vector<double> logits, betas;
  for (int i = 0; i < 100000; ++i) {
    const double b = sample_beta(p, 1.0, rng);
    REQUIRE(b > 0.0);
    REQUIRE(b < p.beta_m);
    logits.push_back(logit(b / p.beta_m));
  }
  CHECK(ks_statistic(logits, 1.0) < 0.01);

  const double t_mid = std::pow(0.5, 1.0 / 5.0);
  for (int i = 0; i < 20001; ++i) betas.push_back(sample_beta(p, t_mid, rng));
  std::nth_element(betas.begin(), betas.begin() + 10000, betas.end());
  CHECK(betas[10000] == doctest::Approx(50.0).epsilon(0.03));
}

TEST_CASE("corruption variants") {
  const Vector y0 = Vector::LinSpaced(4, -1, 1);
  const Vector eps = Vector::Constant(4, 0.7);
  CHECK(corrupt_with(CorruptionVariant::Additive, y0, 0.0, eps).y == y0);
  CHECK(corrupt_with(CorruptionVariant::Interpolation, y0, 0.0, eps).y == y0);
  CHECK(corrupt_with(CorruptionVariant::Interpolation, y0, 1.0, eps).y == eps);
  CHECK(corrupt_with(CorruptionVariant::Additive, y0, 2.0, eps).noise_level_used == 2.0);
  CHECK_THROWS(TimeNoiseParams{2.0, 5.0, CorruptionVariant::Interpolation}.validate());
  CHECK_NOTHROW(TimeNoiseParams{1.0, 5.0, CorruptionVariant::Interpolation}.validate());
}

TEST_CASE("additive corruption variance equals E[beta^2]") {
  const TimeNoiseParams p{3.0, 5.0};
  const double t = 0.8;
  const double eb2 = integrate(p, [&](double b) { return b * b * pdf(p, t, b); });
  Rng rng(5);
  const int n = 100000;
  double s2 = 0.0, s4 = 0.0;
  for (int i = 0; i < n; ++i) {
    const Condition c = corrupt(p, Vector::Zero(1), t, rng);
    s2 += c.y(0) * c.y(0);
    s4 += std::pow(c.y(0), 4);
  }
  const double var = s2 / n;
  const double se = std::sqrt((s4 / n - var * var) / n);
  CHECK(std::abs(var - eb2) < 4.0 * se);
}

TEST_CASE("constant-beta baseline") {
  CHECK(constant_beta({100, 5}, 1.0) == 100.0);
  CHECK(constant_beta({100, 5}, 0.0) == 0.0);
  CHECK(constant_beta({100, 5}, 0.5) == doctest::Approx(3.125));
}
