#pragma once

// Monte Carlo and plug-in checks of the estimator's asymptotic claims:
// variance of sqrt(T)(lambda_T - lambda*), the error bound of the
// loss-weighted rule, normality of the standardized posterior, and the
// mean/argmin gap.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <random>
#include <string>
#include <thread>
#include <vector>

#include "bayesens/baselines.hpp"
#include "bayesens/bayes.hpp"
#include "bayesens/data.hpp"
#include "bayesens/errors.hpp"
#include "bayesens/loss.hpp"
#include "bayesens/rng.hpp"
#include "bayesens/weak.hpp"

namespace bayesens {

enum class Distribution { exponential, bernoulli, uniform };

/// i.i.d. non-negative losses. exponential: a = mean. bernoulli: a = P(1).
/// uniform: [a, b].
struct SyntheticStream {
  Distribution distribution = Distribution::exponential;
  double a = 2.0;
  double b = 0.0;
  std::uint64_t seed = 0;
  std::size_t length = 10000;

  static SyntheticStream exponential(double mean, std::uint64_t seed = 0, std::size_t length = 10000) {
    return {Distribution::exponential, mean, 0.0, seed, length};
  }
  static SyntheticStream bernoulli(double pr, std::uint64_t seed = 0, std::size_t length = 10000) {
    return {Distribution::bernoulli, pr, 0.0, seed, length};
  }
  static SyntheticStream uniform(double lo, double hi, std::uint64_t seed = 0, std::size_t length = 10000) {
    return {Distribution::uniform, lo, hi, seed, length};
  }

  void validate() const {
    switch (distribution) {
      case Distribution::exponential:
        if (!(a > 0.0 && std::isfinite(a))) throw ConfigError("exponential mean must be > 0");
        break;
      case Distribution::bernoulli:
        if (!(a > 0.0 && a <= 1.0)) throw ConfigError("bernoulli probability must lie in (0, 1]");
        break;
      case Distribution::uniform:
        if (!(a >= 0.0 && b > a && std::isfinite(b))) throw ConfigError("uniform needs 0 <= lo < hi");
        break;
    }
  }

  double mean() const noexcept {
    switch (distribution) {
      case Distribution::exponential: return a;
      case Distribution::bernoulli: return a;
      case Distribution::uniform: return 0.5 * (a + b);
    }
    return 0.0;
  }

  double variance() const noexcept {
    switch (distribution) {
      case Distribution::exponential: return a * a;
      case Distribution::bernoulli: return a * (1.0 - a);
      case Distribution::uniform: return (b - a) * (b - a) / 12.0;
    }
    return 0.0;
  }

  /// Inverse-CDF draws so one uniform is consumed per value.
  double draw(SplitMix64& rng) const noexcept {
    const double u = rng.uniform();
    switch (distribution) {
      case Distribution::exponential: return -a * std::log1p(-u);
      case Distribution::bernoulli: return u < a ? 1.0 : 0.0;
      case Distribution::uniform: return a + (b - a) * u;
    }
    return 0.0;
  }

  /// Replication `r` of the stream.
  SplitMix64 rng(std::size_t replication) const noexcept { return SplitMix64(seed, Stream::synthetic, replication); }
};

// --- asymptotic variance -------------------------------------------------

enum class Estimator { bayes, sgd };

struct EstimatorSpec {
  Estimator kind = Estimator::bayes;
  double gamma_tilde = 0.0;  // sgd: gamma = gamma_tilde / theta^2
  double t0 = 50.0;          // sgd step offset
  double init = 1.0;         // sgd starting weight
  GammaPrior prior{};        // bayes

  static EstimatorSpec bayes(GammaPrior prior = {}) { return {Estimator::bayes, 0.0, 50.0, 1.0, prior}; }
  static EstimatorSpec sgd(double gamma_tilde, double t0 = 50.0) { return {Estimator::sgd, gamma_tilde, t0, 1.0, {}}; }
};

inline double optimal_gamma_tilde(const SyntheticStream& s) { return 1.0 / (s.mean() * s.mean()); }

inline bool slow_regime(const SyntheticStream& s, double gamma_tilde) {
  return gamma_tilde <= 0.5 / (s.mean() * s.mean());
}

/// Var(g) / (theta^2 E[g]^4)
inline double predicted_variance_bayes(const SyntheticStream& s, double theta) {
  const double e = s.mean();
  return s.variance() / (theta * theta * e * e * e * e);
}

/// gamma_tilde^2 Var(g) / (theta^2 (2 gamma_tilde E[g]^2 - 1)); NaN in the slow regime.
inline double predicted_variance_sgd(const SyntheticStream& s, double theta, double gamma_tilde) {
  if (slow_regime(s, gamma_tilde)) return std::numeric_limits<double>::quiet_NaN();
  const double e2 = s.mean() * s.mean();
  return gamma_tilde * gamma_tilde * s.variance() / (theta * theta * (2.0 * gamma_tilde * e2 - 1.0));
}

struct VarianceReport {
  std::string estimator;
  double empirical = 0.0;
  double predicted = 0.0;
  std::size_t replications = 0;
  double half_width = 0.0;  // 95%, normal approximation for a sample variance
  bool slow_regime = false;
  double target = 0.0;      // lambda* = 1 / (theta E[g])
};

/// Final estimate lambda_T for one replication of the stream.
inline double run_estimator(const SyntheticStream& s, const EstimatorSpec& spec, double theta, std::size_t T,
                            std::size_t replication) {
  auto rng = s.rng(replication);
  if (spec.kind == Estimator::bayes) {
    double sum = 0.0;
    for (std::size_t t = 0; t < T; ++t) sum += s.draw(rng);
    return (spec.prior.alpha + static_cast<double>(T)) / (spec.prior.beta + theta * sum);
  }
  auto st = SgdState::make(1, spec.gamma_tilde / (theta * theta), theta, spec.init, spec.t0);
  std::vector<double> g(1);
  for (std::size_t t = 0; t < T; ++t) {
    g[0] = s.draw(rng);
    sgd_step(st, g);
  }
  return st.lambda[0];
}

/// Replications are independent and run on `threads` workers; replication r
/// always uses stream r, so the result does not depend on the thread count.
inline VarianceReport mc_variance(const SyntheticStream& s, const EstimatorSpec& spec, double theta, std::size_t T,
                                  std::size_t replications, std::size_t threads = 0) {
  s.validate();
  if (replications < 100) throw ConfigError("mc_variance needs at least 100 replications");
  if (T < 1) throw ConfigError("T must be >= 1");
  if (!(theta > 0.0)) throw ConfigError("theta must be > 0");
  if (spec.kind == Estimator::sgd && !(spec.gamma_tilde > 0.0)) throw ConfigError("gamma_tilde must be > 0");

  VarianceReport rep;
  rep.estimator = spec.kind == Estimator::bayes ? "bayes" : "sgd";
  rep.replications = replications;
  rep.target = 1.0 / (theta * s.mean());
  if (spec.kind == Estimator::sgd) {
    rep.slow_regime = slow_regime(s, spec.gamma_tilde);
    rep.predicted = predicted_variance_sgd(s, theta, spec.gamma_tilde);
  } else {
    rep.predicted = predicted_variance_bayes(s, theta);
  }

  std::vector<double> z(replications);
  const double root_t = std::sqrt(static_cast<double>(T));
  auto work = [&](std::size_t first, std::size_t stride) {
    for (std::size_t r = first; r < replications; r += stride)
      z[r] = root_t * (run_estimator(s, spec, theta, T, r) - rep.target);
  };
  const std::size_t workers = std::min<std::size_t>(
      replications, threads ? threads : std::max(1u, std::thread::hardware_concurrency()));
  if (workers <= 1) {
    work(0, 1);
  } else {
    std::vector<std::thread> pool;
    for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(work, w, workers);
    for (auto& th : pool) th.join();
  }

  double mean = 0.0;
  for (double v : z) mean += v;
  mean /= static_cast<double>(replications);
  double ss = 0.0;
  for (double v : z) ss += (v - mean) * (v - mean);
  rep.empirical = ss / static_cast<double>(replications - 1);
  rep.half_width = 1.96 * rep.empirical * std::sqrt(2.0 / static_cast<double>(replications - 1));
  return rep;
}

/// Two empirical variances differ significantly when their gap exceeds the
/// root-sum-square of the half-widths.
inline double combined_half_width(const VarianceReport& a, const VarianceReport& b) {
  return std::hypot(a.half_width, b.half_width);
}

// --- error bound ---------------------------------------------------------

struct BoundReport {
  double p = 2.0;
  double error = 0.0;  // empirical error of the rule with lambda_i = 1/(theta E[g_i])
  double bound = 0.0;
  std::size_t learners_used = 0;
  std::size_t learners_excluded = 0;  // E[g_i] = 0
  std::size_t samples = 0;

  double margin() const noexcept { return bound - error; }
};

/// Plug-in version of the bound. The population means E[g_i(x, y)] are
/// replaced by empirical means over `eval`, which is also the sample the
/// error and the outer expectation are taken over; learners with a zero
/// mean are dropped from both the rule and the bound.
inline BoundReport check_bound(const Dataset& eval, const WeakPool& pool, BaseLoss kind, double p,
                               bool binary_outputs = true) {
  if (!(p > 1.0)) throw ConfigError("check_bound needs p > 1");
  if (eval.empty()) throw ConfigError("check_bound needs a non-empty evaluation set");
  const std::size_t m = pool.size();
  const std::size_t n = eval.size();

  std::vector<PoolLosses> losses(n);
  DenseRow row(eval.dimension);
  std::vector<double> mean(m, 0.0);
  for (std::size_t k = 0; k < n; ++k) {
    row.load(eval.samples[k]);
    evaluate_pool(pool, row.values(), kind, binary_outputs, losses[k]);
    const auto g = losses[k].for_label(eval.samples[k].label);
    for (std::size_t i = 0; i < m; ++i) mean[i] += g[i];
  }
  BoundReport rep;
  rep.p = p;
  rep.samples = n;
  std::vector<double> inv(m, 0.0);  // 1/E[g_i], 0 for excluded learners
  for (std::size_t i = 0; i < m; ++i) {
    mean[i] /= static_cast<double>(n);
    if (mean[i] > 0.0) {
      inv[i] = 1.0 / mean[i];
      ++rep.learners_used;
    } else {
      ++rep.learners_excluded;
    }
  }
  if (rep.learners_used == 0) throw DomainError("every learner has zero mean loss");

  // lambda_i is proportional to 1/E[g_i]; theta cancels in the rule.
  std::size_t errors = 0;
  double outer = 0.0;
  const double expo = -1.0 / (p - 1.0);
  for (std::size_t k = 0; k < n; ++k) {
    const Label y = eval.samples[k].label;
    if (predict(inv, losses[k].if_positive, losses[k].if_negative) != y) ++errors;
    const auto wrong = losses[k].for_label(flip(y));
    double b = 0.0;
    for (std::size_t i = 0; i < m; ++i) b += wrong[i] * inv[i];
    outer += b > 0.0 ? std::pow(b, expo) : std::numeric_limits<double>::infinity();
  }
  rep.error = static_cast<double>(errors) / static_cast<double>(n);
  outer /= static_cast<double>(n);
  rep.bound = std::pow(static_cast<double>(rep.learners_used), 1.0 / p) * std::pow(outer, (p - 1.0) / p);
  return rep;
}

// --- normality -----------------------------------------------------------

struct NormalityReport {
  std::size_t T = 0;
  std::size_t samples = 0;
  double ks = 0.0;  // sup |F_n(z) - Phi(z)|
  double mean = 0.0;
  double variance = 0.0;
};

inline double standard_normal_cdf(double z) { return 0.5 * std::erfc(-z / std::sqrt(2.0)); }

/// Kolmogorov-Smirnov distance of the sample to the standard normal.
inline double ks_distance(std::vector<double> z) {
  std::sort(z.begin(), z.end());
  const double n = static_cast<double>(z.size());
  double d = 0.0;
  for (std::size_t i = 0; i < z.size(); ++i) {
    const double f = standard_normal_cdf(z[i]);
    d = std::max({d, static_cast<double>(i + 1) / n - f, f - static_cast<double>(i) / n});
  }
  return d;
}

/// Draws from the exact Gamma posterior after the first T stream values,
/// standardized as sqrt(H) (lambda - lambda_MAP) with H the analytic Hessian
/// of the cumulative loss at its minimizer.
inline NormalityReport check_normality(const SyntheticStream& s, std::size_t T, std::size_t sample_count,
                                       double theta = 0.1, GammaPrior prior = {}) {
  s.validate();
  if (sample_count < 2) throw ConfigError("check_normality needs at least 2 samples");
  auto rng = s.rng(0);
  double sum = 0.0;
  for (std::size_t t = 0; t < T; ++t) sum += s.draw(rng);
  const double shape = prior.alpha + static_cast<double>(T);
  const double rate = prior.beta + theta * sum;
  const double map = (shape - 1.0) / rate;
  if (!(map > 0.0)) throw DomainError("posterior mode is not interior at this T");
  const double root_h = std::sqrt(shape - 1.0) / map;

  SplitMix64 draws(s.seed, Stream::posterior_draws, T);
  std::gamma_distribution<double> gamma(shape, 1.0 / rate);
  std::vector<double> z(sample_count);
  double mu = 0.0;
  for (auto& v : z) {
    v = root_h * (gamma(draws) - map);
    mu += v;
  }
  mu /= static_cast<double>(sample_count);
  double ss = 0.0;
  for (double v : z) ss += (v - mu) * (v - mu);
  return {T, sample_count, ks_distance(std::move(z)), mu, ss / static_cast<double>(sample_count - 1)};
}

// --- mean / argmin gap ---------------------------------------------------

struct GapPoint {
  std::size_t t = 0;
  double gap = 0.0;          // posterior mean minus cumulative-loss minimizer
  double scaled = 0.0;       // gap * sqrt(t)
};

/// Gap of a single weight along a scalar loss history, starting at t = 0.
/// While alpha0 - 1 + t <= 0 the minimizer sits at the boundary 0.
inline std::vector<GapPoint> check_gap(std::span<const double> history, GammaPrior prior = {}, double theta = 0.1) {
  auto state = GammaPosterior::make(1, prior, theta);
  std::vector<GapPoint> out;
  out.reserve(history.size() + 1);
  std::vector<double> g(1);
  for (std::size_t t = 0;; ++t) {
    const double rate = state.beta0 + state.theta * state.loss_sums[0];
    const double mode = std::max(0.0, state.alpha0 - 1.0 + static_cast<double>(t)) / rate;
    const double gap = posterior_mean_closed(state).lambda[0] - mode;
    out.push_back({t, gap, gap * std::sqrt(static_cast<double>(t))});
    if (t == history.size()) break;
    g[0] = history[t];
    update_closed_form(state, g);
  }
  return out;
}

inline std::vector<double> draw_history(const SyntheticStream& s, std::size_t replication = 0) {
  auto rng = s.rng(replication);
  std::vector<double> h(s.length);
  for (auto& v : h) v = s.draw(rng);
  return h;
}

}  // namespace bayesens
