#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "bayesens/loss.hpp"

using namespace bayesens;

namespace {

double rel_err(double got, double want) { return std::abs(got - want) / std::max(std::abs(want), 1e-300); }

// Central difference of f along coordinate i.
template <typename F>
double central_diff(F f, std::vector<double> x, std::size_t i, double h) {
  const double x0 = x[i];
  x[i] = x0 + h;
  const double up = f(x);
  x[i] = x0 - h;
  const double down = f(x);
  return (up - down) / (2.0 * h);
}

std::vector<double> random_vec(std::mt19937_64& rng, std::size_t n, double lo, double hi) {
  std::uniform_real_distribution<double> d(lo, hi);
  std::vector<double> v(n);
  for (auto& x : v) x = d(rng);
  return v;
}

}  // namespace

TEST(BaseLoss, Ramp) {
  EXPECT_EQ(base_loss(BaseLoss::ramp, 1.0), 0.0);
  EXPECT_EQ(base_loss(BaseLoss::ramp, -1.0), 1.0);
  EXPECT_EQ(base_loss(BaseLoss::ramp, 0.0), 0.5);
  EXPECT_EQ(base_loss(BaseLoss::ramp, -7.0), 1.0);
  EXPECT_EQ(base_loss(BaseLoss::ramp, 3.0), 0.0);
}

TEST(BaseLoss, LogisticHingeZeroOne) {
  EXPECT_EQ(base_loss(BaseLoss::logistic, 0.0), 0.5);
  EXPECT_NEAR(base_loss(BaseLoss::logistic, 2.0), 1.0 / (1.0 + std::exp(2.0)), 1e-16);
  EXPECT_GE(base_loss(BaseLoss::logistic, 800.0), 0.0);
  EXPECT_EQ(base_loss(BaseLoss::logistic, -800.0), 1.0);
  EXPECT_EQ(base_loss(BaseLoss::hinge, 0.25), 0.75);
  EXPECT_EQ(base_loss(BaseLoss::hinge, 2.0), 0.0);
  EXPECT_EQ(base_loss(BaseLoss::zero_one, 0.0), 1.0);
  EXPECT_EQ(base_loss(BaseLoss::zero_one, 1e-300), 0.0);
  EXPECT_EQ(base_loss(BaseLoss::zero_one, -0.5), 1.0);
}

TEST(BaseLoss, LabelAndBinaryOutput) {
  EXPECT_EQ(base_loss(BaseLoss::hinge, 0.5, Label::negative), 1.5);
  EXPECT_EQ(base_loss(BaseLoss::ramp, 0.2, Label::positive, true), 0.0);
  EXPECT_EQ(base_loss(BaseLoss::ramp, 0.0, Label::negative, true), 1.0);  // tie -> +1
}

TEST(BaseLoss, NonIncreasingOnGrid) {
  for (auto kind : {BaseLoss::ramp, BaseLoss::logistic, BaseLoss::hinge, BaseLoss::zero_one}) {
    double prev = base_loss(kind, -10.0);
    for (int k = 1; k < 1000; ++k) {
      const double z = -10.0 + 20.0 * k / 999.0;
      const double v = base_loss(kind, z);
      ASSERT_LE(v, prev) << to_string(kind) << " z=" << z;
      ASSERT_GE(v, 0.0);
      ASSERT_TRUE(std::isfinite(v));
      prev = v;
    }
  }
}

TEST(BaseLoss, ParseNames) {
  EXPECT_EQ(parse_base_loss("logistic"), BaseLoss::logistic);
  EXPECT_EQ(parse_base_loss(to_string(BaseLoss::zero_one)), BaseLoss::zero_one);
  EXPECT_THROW(parse_base_loss("squared"), ConfigError);
}

TEST(EnsembleLoss, BasicExamples) {
  const std::vector<double> ones{1.0, 1.0}, zeros{0.0, 0.0};
  EXPECT_EQ(ensemble_loss_basic(ones, zeros, 0.1), 0.0);
  EXPECT_EQ(ensemble_loss_basic(std::vector{1.0}, std::vector{2.0}, 0.5), 1.0);
  EXPECT_NEAR(ensemble_loss_basic(std::vector{std::numbers::e}, std::vector{0.0}, 1.0), -1.0, 1e-15);
  EXPECT_THROW(ensemble_loss_basic(std::vector{0.0}, std::vector{1.0}, 1.0), DomainError);
  EXPECT_THROW(ensemble_loss_basic(std::vector{-1.0}, std::vector{1.0}, 1.0), DomainError);
}

TEST(EnsembleLoss, ShapeExamples) {
  EXPECT_NEAR(ensemble_loss_gamma_shape(std::vector{1.0}, std::vector{1.0}, 1.0), 1.0, 1e-15);
  EXPECT_NEAR(ensemble_loss_gamma_shape(std::vector{2.0}, std::vector{1.0}, 1.0), 1.0, 1e-15);
  EXPECT_THROW(ensemble_loss_gamma_shape(std::vector{1.0}, std::vector{0.0}, 1.0), DomainError);
}

TEST(EnsembleLoss, ShapeRateExamples) {
  EXPECT_NEAR(ensemble_loss_gamma_shape_rate(std::vector{1.0}, std::vector{1.0}, std::vector{1.0}), 1.0, 1e-15);
  EXPECT_NEAR(ensemble_loss_gamma_shape_rate(std::vector{1.0}, std::vector{2.0}, std::vector{1.0}),
              2.0 - std::log(2.0), 1e-15);
  EXPECT_THROW(ensemble_loss_gamma_shape_rate(std::vector{1.0}, std::vector{0.0}, std::vector{1.0}), DomainError);
}

TEST(EnsembleLoss, GradientsMatchCentralDifferences) {
  std::mt19937_64 rng(3);
  for (int rep = 0; rep < 50; ++rep) {
    const auto lam = random_vec(rng, 4, 0.2, 6.0);
    const auto g = random_vec(rng, 4, 0.05, 3.0);
    const double theta = 0.1 + 0.9 * (rep % 5) / 4.0;

    const auto gb = ensemble_loss_basic_gradient(lam, g, theta);
    const auto gs = ensemble_loss_gamma_shape_gradient(lam, g, theta);
    for (std::size_t i = 0; i < lam.size(); ++i) {
      const double h = 1e-5 * lam[i];
      const double fb = central_diff([&](const auto& x) { return ensemble_loss_basic(x, g, theta); }, lam, i, h);
      const double fs = central_diff([&](const auto& x) { return ensemble_loss_gamma_shape(x, g, theta); }, lam, i, h);
      EXPECT_LT(std::abs(gb[i] - fb), 1e-6 * std::max(1.0, std::abs(fb)));
      EXPECT_LT(std::abs(gs[i] - fs), 1e-6 * std::max(1.0, std::abs(fs)));
    }

    const auto beta = random_vec(rng, 4, 0.2, 4.0);
    const auto gr = ensemble_loss_gamma_shape_rate_gradient(lam, beta, g);
    for (std::size_t i = 0; i < lam.size(); ++i) {
      const double fa = central_diff([&](const auto& a) { return ensemble_loss_gamma_shape_rate(a, beta, g); }, lam, i,
                                     1e-5 * lam[i]);
      const double fbeta = central_diff([&](const auto& b) { return ensemble_loss_gamma_shape_rate(lam, b, g); },
                                        beta, i, 1e-5 * beta[i]);
      EXPECT_LT(std::abs(gr.d_alpha[i] - fa), 1e-6 * std::max(1.0, std::abs(fa)));
      EXPECT_LT(std::abs(gr.d_beta[i] - fbeta), 1e-6 * std::max(1.0, std::abs(fbeta)));
    }
  }
}

TEST(EnsembleLoss, BasicConvexAlongRandomLines) {
  std::mt19937_64 rng(8);
  std::uniform_real_distribution<double> u(0.01, 10.0);
  for (int rep = 0; rep < 500; ++rep) {
    const auto g = random_vec(rng, 3, 0.0, 2.0);
    auto a = random_vec(rng, 3, 0.01, 10.0);
    auto b = random_vec(rng, 3, 0.01, 10.0);
    std::vector<double> mid(3);
    for (int i = 0; i < 3; ++i) mid[i] = 0.5 * (a[i] + b[i]);
    const double lhs = ensemble_loss_basic(mid, g, 0.1);
    const double rhs = 0.5 * (ensemble_loss_basic(a, g, 0.1) + ensemble_loss_basic(b, g, 0.1));
    ASSERT_LE(lhs, rhs + 1e-12);
  }
}

TEST(LogGamma, MatchesReferenceValues) {
  // mpmath.loggamma at 30 digits
  const std::pair<double, double> ref[] = {
      {1e-6, 13.81550998074943166921},  {0.001, 6.907178885383853682512},  {0.5, 0.5723649429247000870717},
      {1.5, -0.1207822376352452223455}, {2.5, 0.2846828704729191596325},   {3.0, 0.6931471805599453094172},
      {7.25, 7.052185450738539444926},  {33.3, 82.60372358165495292832},   {150.75, 603.7668223739874758781},
      {299.5, 1406.351427623710617903}, {0.999, 0.0005780385328913797240363}};
  for (const auto& [x, want] : ref) EXPECT_LT(rel_err(std::lgamma(x), want), 1e-12) << x;
}

TEST(Digamma, MatchesReferenceValues) {
  const std::pair<double, double> ref[] = {{0.001, -1000.575571931810300471},
                                           {0.5, -1.963510026021423479441},
                                           {2.5, 0.7031566406452431872257},
                                           {33.3, 3.490467238520242863925}};
  for (const auto& [x, want] : ref) EXPECT_LT(rel_err(boost::math::digamma(x), want), 1e-13) << x;
}

namespace {

std::vector<LossVector> random_history(std::mt19937_64& rng, std::size_t steps, std::size_t m) {
  std::vector<LossVector> h;
  for (std::size_t t = 0; t < steps; ++t) h.push_back(random_vec(rng, m, 0.0, 1.0));
  return h;
}

std::vector<double> sums(const std::vector<LossVector>& h, std::size_t m) {
  std::vector<double> s(m, 0.0);
  for (const auto& g : h)
    for (std::size_t i = 0; i < m; ++i) s[i] += g[i];
  return s;
}

}  // namespace

TEST(CumulativeLoss, EmptyHistoryIsPriorTerm) {
  const std::vector<double> lam{0.5, 2.0};
  const GammaPrior prior{3.0, 2.0};
  const double want = 2.0 * 2.5 - 2.0 * (std::log(0.5) + std::log(2.0));
  EXPECT_NEAR(cumulative_loss_basic(lam, prior, 0.1, {}), want, 1e-14);
}

TEST(CumulativeLoss, Additivity) {
  std::mt19937_64 rng(1);
  const auto h = random_history(rng, 12, 3);
  const std::vector<double> lam{0.7, 1.3, 4.0};
  const GammaPrior prior{};
  const std::span<const LossVector> all(h);
  EXPECT_NEAR(cumulative_loss_basic(lam, prior, 0.1, all),
              cumulative_loss_basic(lam, prior, 0.1, all.first(11)) + ensemble_loss_basic(lam, h.back(), 0.1), 1e-12);

  const ShapePrior sp{};
  std::vector<LossVector> pos = h;
  for (auto& g : pos)
    for (auto& v : g) v += 0.01;
  const std::span<const LossVector> p(pos);
  EXPECT_NEAR(cumulative_loss_shape(lam, sp, 0.1, p),
              cumulative_loss_shape(lam, sp, 0.1, p.first(11)) + ensemble_loss_gamma_shape(lam, pos.back(), 0.1),
              1e-10);
  const std::vector<double> beta{0.5, 1.0, 2.0};
  EXPECT_NEAR(cumulative_loss_shape_rate(lam, beta, {}, p),
              cumulative_loss_shape_rate(lam, beta, {}, p.first(11)) +
                  ensemble_loss_gamma_shape_rate(lam, beta, pos.back()),
              1e-10);
}

TEST(CumulativeLoss, ArgminBeatsRandomProbes) {
  std::mt19937_64 rng(17);
  const GammaPrior prior{1.0, 1.0};
  for (int rep = 0; rep < 20; ++rep) {
    const auto h = random_history(rng, 25, 3);
    const auto star = cumulative_loss_basic_argmin(prior, 0.1, h.size(), sums(h, 3));
    const double best = cumulative_loss_basic(star, prior, 0.1, h);
    for (int probe = 0; probe < 100; ++probe) {
      auto lam = star;
      std::normal_distribution<double> jitter(0.0, 0.3);
      for (auto& l : lam) l = std::max(1e-3, l * std::exp(jitter(rng)));
      ASSERT_LE(best, cumulative_loss_basic(lam, prior, 0.1, h) + 1e-12);
    }
    const auto grad = cumulative_loss_basic_gradient(star, prior, 0.1, h);
    for (double d : grad) EXPECT_NEAR(d, 0.0, 1e-12);
  }
  EXPECT_THROW(cumulative_loss_basic_argmin({0.5, 1.0}, 0.1, 0, std::vector<double>{0.0}), DomainError);
}

TEST(CumulativeLoss, HessianIsDiagonalAndLossIndependent) {
  std::mt19937_64 rng(23);
  const GammaPrior prior{2.0, 1.0};
  const std::vector<double> lam{0.8, 2.5};
  const auto want = cumulative_loss_basic_hessian(lam, prior, 10);
  EXPECT_NEAR(want[0], 11.0 / 0.64, 1e-12);
  for (int rep = 0; rep < 5; ++rep) {
    const auto h = random_history(rng, 10, 2);
    for (std::size_t i = 0; i < 2; ++i) {
      const double step = 1e-4 * lam[i];
      const double fd = central_diff(
          [&](const auto& x) { return cumulative_loss_basic_gradient(x, prior, 0.1, h)[i]; }, lam, i, step);
      EXPECT_LT(rel_err(fd, want[i]), 1e-6);
      const std::size_t j = 1 - i;
      const double cross = central_diff(
          [&](const auto& x) { return cumulative_loss_basic_gradient(x, prior, 0.1, h)[j]; }, lam, i, step);
      EXPECT_NEAR(cross, 0.0, 1e-8);
    }
  }
}
