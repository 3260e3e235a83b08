#include <gtest/gtest.h>

#include <cmath>
#include <limits>
#include <random>

#include "bayesens/bayes.hpp"
#include "bayesens/quadrature.hpp"

using namespace bayesens;

namespace {

// Reference means from tests/oracles/quadrature_oracles.py (mpmath, 25 digits).
constexpr double kInvGammaMean = 1.93456704214788472;        // density 1/Gamma(l)
constexpr double kInvGammaCubedMean = 1.62004241560965319;   // density 1/Gamma(l)^3
constexpr double kShapeT5Mean = 0.386119681632325361;        // a=1, theta=0.1, b=c=6, g=(.3,.5,.2,.9,.4)

double rel(double a, double b) { return std::abs(a - b) / std::abs(b); }

double trapezoid_mean(auto logw, double lo, double hi, std::size_t n) {
  const double h = (hi - lo) / static_cast<double>(n);
  double z = 0.0, zx = 0.0;
  for (std::size_t i = 0; i <= n; ++i) {
    const double x = lo + h * static_cast<double>(i);
    const double w = std::exp(logw(x)) * (i == 0 || i == n ? 0.5 : 1.0);
    z += w;
    zx += x * w;
  }
  return zx / z;
}

}  // namespace

TEST(Quadrature, GammaDensityMean) {
  for (double k : {0.5, 1.0, 1.5, 3.0, 40.0, 900.0})
    for (double rate : {0.01, 1.0, 250.0}) {
      const auto m = log_space_mean([&](double x) { return (k - 1.0) * std::log(x) - rate * x; });
      EXPECT_LT(rel(m.mean, k / rate), 1e-9) << k << ' ' << rate;
    }
}

TEST(Quadrature, InverseGammaDensities) {
  EXPECT_LT(rel(log_space_mean([](double l) { return -std::lgamma(l); }).mean, kInvGammaMean), 1e-10);
  EXPECT_LT(rel(log_space_mean([](double l) { return -3.0 * std::lgamma(l); }).mean, kInvGammaCubedMean), 1e-10);
}

TEST(Quadrature, TrapezoidBruteForce) {
  auto logw = [](double l) { return -std::lgamma(l); };
  const double brute = trapezoid_mean(logw, 1e-6, 60.0, 2'000'000);
  EXPECT_LT(rel(log_space_mean(logw).mean, brute), 1e-8);
}

TEST(Quadrature, Deterministic) {
  auto logw = [](double l) { return 2.5 * std::log(l) - 7.0 * std::lgamma(l) + l; };
  const auto a = log_space_mean(logw);
  const auto b = log_space_mean(logw);
  EXPECT_EQ(a.mean, b.mean);
  EXPECT_EQ(a.evaluations, b.evaluations);
}

TEST(Quadrature, FallbackStillAccurate) {
  QuadratureOptions opt;
  opt.max_depth = 0;
  opt.initial_panels = 1;
  opt.rel_tol = 1e-12;
  const auto m = log_space_mean([](double l) { return -std::lgamma(l); }, opt);
  EXPECT_TRUE(m.used_fallback);
  EXPECT_LT(rel(m.mean, kInvGammaMean), 1e-8);
}

TEST(Quadrature, NowhereFiniteThrows) {
  EXPECT_THROW(log_space_mean([](double) { return -std::numeric_limits<double>::infinity(); }), NumericalError);
  EXPECT_THROW(log_space_mean([](double) { return std::numeric_limits<double>::quiet_NaN(); }), NumericalError);
}

TEST(Quadrature, NodeDoublingInvariance) {
  std::mt19937_64 rng(31);
  std::uniform_real_distribution<double> lg(-3.0, -0.05);
  std::uniform_int_distribution<int> steps(0, 2000);
  QuadratureOptions doubled;
  doubled.initial_panels *= 2;
  for (int rep = 0; rep < 100; ++rep) {
    auto s = ShapePosterior::make(1);
    s.t = static_cast<std::size_t>(steps(rng));
    s.log_prod[0] = lg(rng) * static_cast<double>(s.t);
    const auto a = posterior_mean_shape(s).lambda[0];
    const auto b = posterior_mean_shape(s, doubled).lambda[0];
    ASSERT_LT(rel(a, b), 1e-6) << "t=" << s.t;
  }
}

TEST(ShapeMean, ReferenceStates) {
  auto s = ShapePosterior::make(1, {1.0, 1.0, 1.0}, 1.0);
  EXPECT_LT(rel(posterior_mean_shape(s).lambda[0], kInvGammaMean), 1e-10);

  auto u = ShapePosterior::make(1, {}, 0.1);
  for (double g : {0.3, 0.5, 0.2, 0.9, 0.4}) update_shape(u, std::vector{g});
  EXPECT_EQ(u.b_eff(), 6.0);
  EXPECT_LT(rel(posterior_mean_shape(u).lambda[0], kShapeT5Mean), 1e-9);
}
