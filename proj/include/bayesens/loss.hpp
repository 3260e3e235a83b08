#pragma once

// Base losses on weak-learner margins and the three ensemble losses
// (exponential/Gamma-prior "basic", Gamma-shape, Gamma shape-rate) with
// gradients and cumulative (prior + history) forms.

#include <algorithm>
#include <cmath>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <boost/math/special_functions/digamma.hpp>

#include "bayesens/data.hpp"
#include "bayesens/errors.hpp"

namespace bayesens {

enum class BaseLoss { ramp, logistic, hinge, zero_one };

inline const char* to_string(BaseLoss k) {
  switch (k) {
    case BaseLoss::ramp: return "ramp";
    case BaseLoss::logistic: return "logistic";
    case BaseLoss::hinge: return "hinge";
    case BaseLoss::zero_one: return "zero_one";
  }
  return "?";
}

inline BaseLoss parse_base_loss(std::string_view s) {
  if (s == "ramp") return BaseLoss::ramp;
  if (s == "logistic") return BaseLoss::logistic;
  if (s == "hinge") return BaseLoss::hinge;
  if (s == "zero_one") return BaseLoss::zero_one;
  throw ConfigError("unknown base loss '" + std::string(s) + "'");
}

/// Loss at margin z = y * score. All four are non-increasing in z.
///   ramp      min(1, max(0, (1 - z) / 2))
///   logistic  1 / (1 + e^z)
///   hinge     max(0, 1 - z)
///   zero_one  1 if z <= 0 (ties are errors) else 0
inline double base_loss(BaseLoss kind, double z) noexcept {
  switch (kind) {
    case BaseLoss::ramp: return std::clamp((1.0 - z) / 2.0, 0.0, 1.0);
    case BaseLoss::logistic:
      if (z >= 0.0) {
        const double e = std::exp(-z);
        return e / (1.0 + e);
      }
      return 1.0 / (1.0 + std::exp(z));
    case BaseLoss::hinge: return std::max(0.0, 1.0 - z);
    case BaseLoss::zero_one: return z <= 0.0 ? 1.0 : 0.0;
  }
  return 0.0;
}

/// Loss of predicting `score` when the truth is `label`. With
/// `binary_output` the score is replaced by its sign first (ties +1).
inline double base_loss(BaseLoss kind, double score, Label label, bool binary_output = false) noexcept {
  if (binary_output) score = score >= 0.0 ? 1.0 : -1.0;
  return base_loss(kind, sign_of(label) * score);
}

/// Per-step vector of weak-learner losses g^t.
using LossVector = std::vector<double>;

inline void require_loss_vector(std::span<const double> g, bool strictly_positive = false) {
  for (double v : g) {
    if (!std::isfinite(v) || v < 0.0) throw DomainError("loss entries must be finite and non-negative");
    if (strictly_positive && v <= 0.0) throw DomainError("loss entries must be strictly positive for the Gamma-likelihood losses");
  }
}

namespace detail {

inline void require_same_size(std::size_t a, std::size_t b) {
  if (a != b) throw DomainError("weight and loss vectors differ in length");
}

inline void require_positive(std::span<const double> v, const char* what) {
  for (double x : v)
    if (!(x > 0.0) || !std::isfinite(x)) throw DomainError(std::string(what) + " must be finite and > 0");
}

}  // namespace detail

// --- basic: theta * sum(lambda_i g_i) - sum(log lambda_i) ------------------

inline double ensemble_loss_basic(std::span<const double> lambda, std::span<const double> g, double theta) {
  detail::require_same_size(lambda.size(), g.size());
  detail::require_positive(lambda, "weights");
  double v = 0.0;
  for (std::size_t i = 0; i < lambda.size(); ++i) v += theta * lambda[i] * g[i] - std::log(lambda[i]);
  return v;
}

inline std::vector<double> ensemble_loss_basic_gradient(std::span<const double> lambda, std::span<const double> g,
                                                        double theta) {
  detail::require_same_size(lambda.size(), g.size());
  detail::require_positive(lambda, "weights");
  std::vector<double> out(lambda.size());
  for (std::size_t i = 0; i < lambda.size(); ++i) out[i] = theta * g[i] - 1.0 / lambda[i];
  return out;
}

// --- Gamma shape: sum (1-l) log g + theta sum g + sum lgamma(l) - log(theta) sum l

inline double ensemble_loss_gamma_shape(std::span<const double> lambda, std::span<const double> g, double theta) {
  detail::require_same_size(lambda.size(), g.size());
  detail::require_positive(lambda, "weights");
  detail::require_positive(g, "losses");
  const double log_theta = std::log(theta);
  double v = 0.0;
  for (std::size_t i = 0; i < lambda.size(); ++i)
    v += (1.0 - lambda[i]) * std::log(g[i]) + theta * g[i] + std::lgamma(lambda[i]) - log_theta * lambda[i];
  return v;
}

inline std::vector<double> ensemble_loss_gamma_shape_gradient(std::span<const double> lambda,
                                                              std::span<const double> g, double theta) {
  detail::require_same_size(lambda.size(), g.size());
  detail::require_positive(lambda, "weights");
  detail::require_positive(g, "losses");
  const double log_theta = std::log(theta);
  std::vector<double> out(lambda.size());
  for (std::size_t i = 0; i < lambda.size(); ++i)
    out[i] = -std::log(g[i]) + boost::math::digamma(lambda[i]) - log_theta;
  return out;
}

// --- Gamma shape-rate: sum b g + sum (1-a) log g + sum lgamma(a) - sum a log b

inline double ensemble_loss_gamma_shape_rate(std::span<const double> alpha, std::span<const double> beta,
                                             std::span<const double> g) {
  detail::require_same_size(alpha.size(), g.size());
  detail::require_same_size(beta.size(), g.size());
  detail::require_positive(alpha, "shape weights");
  detail::require_positive(beta, "rate weights");
  detail::require_positive(g, "losses");
  double v = 0.0;
  for (std::size_t i = 0; i < g.size(); ++i)
    v += beta[i] * g[i] + (1.0 - alpha[i]) * std::log(g[i]) + std::lgamma(alpha[i]) - alpha[i] * std::log(beta[i]);
  return v;
}

struct ShapeRateGradient {
  std::vector<double> d_alpha;
  std::vector<double> d_beta;
};

inline ShapeRateGradient ensemble_loss_gamma_shape_rate_gradient(std::span<const double> alpha,
                                                                 std::span<const double> beta,
                                                                 std::span<const double> g) {
  detail::require_same_size(alpha.size(), g.size());
  detail::require_same_size(beta.size(), g.size());
  detail::require_positive(alpha, "shape weights");
  detail::require_positive(beta, "rate weights");
  detail::require_positive(g, "losses");
  ShapeRateGradient out{std::vector<double>(g.size()), std::vector<double>(g.size())};
  for (std::size_t i = 0; i < g.size(); ++i) {
    out.d_alpha[i] = -std::log(g[i]) + boost::math::digamma(alpha[i]) - std::log(beta[i]);
    out.d_beta[i] = g[i] - alpha[i] / beta[i];
  }
  return out;
}

// --- priors and cumulative losses -----------------------------------------

/// Gamma(shape alpha, rate beta) prior on each weight.
struct GammaPrior {
  double alpha = 1.0;
  double beta = 1.0;

  friend bool operator==(const GammaPrior&, const GammaPrior&) = default;
};

/// Conjugate prior for the Gamma-shape likelihood: a^(l-1) theta^(c l) / Gamma(l)^b.
struct ShapePrior {
  double a = 1.0;
  double b = 1.0;
  double c = 1.0;

  friend bool operator==(const ShapePrior&, const ShapePrior&) = default;
};

/// Conjugate prior for the shape-rate likelihood:
/// p^(alpha-1) e^(-q beta) / (Gamma(alpha)^r beta^(-alpha s)).
struct ShapeRatePrior {
  double p = 1.0;
  double q = 1.0;
  double r = 1.5;
  double s = 1.0;

  friend bool operator==(const ShapeRatePrior&, const ShapeRatePrior&) = default;
};

/// l0 = beta sum(l) - (alpha - 1) sum(log l), plus one basic loss per history step.
inline double cumulative_loss_basic(std::span<const double> lambda, const GammaPrior& prior, double theta,
                                    std::span<const LossVector> history) {
  detail::require_positive(lambda, "weights");
  double v = 0.0;
  for (double l : lambda) v += prior.beta * l - (prior.alpha - 1.0) * std::log(l);
  for (const auto& g : history) v += ensemble_loss_basic(lambda, g, theta);
  return v;
}

/// Gradient of the cumulative basic loss: beta + theta S_i - (alpha - 1 + T) / l_i.
inline std::vector<double> cumulative_loss_basic_gradient(std::span<const double> lambda, const GammaPrior& prior,
                                                          double theta, std::span<const LossVector> history) {
  detail::require_positive(lambda, "weights");
  std::vector<double> out(lambda.size());
  const double shape = prior.alpha - 1.0 + static_cast<double>(history.size());
  for (std::size_t i = 0; i < lambda.size(); ++i) {
    double s = 0.0;
    for (const auto& g : history) s += g.at(i);
    out[i] = prior.beta + theta * s - shape / lambda[i];
  }
  return out;
}

/// Diagonal Hessian of the cumulative basic loss, (alpha - 1 + T) / l_i^2.
/// Independent of the observed losses.
inline std::vector<double> cumulative_loss_basic_hessian(std::span<const double> lambda, const GammaPrior& prior,
                                                         std::size_t steps) {
  detail::require_positive(lambda, "weights");
  std::vector<double> out(lambda.size());
  const double shape = prior.alpha - 1.0 + static_cast<double>(steps);
  for (std::size_t i = 0; i < lambda.size(); ++i) out[i] = shape / (lambda[i] * lambda[i]);
  return out;
}

/// Closed-form minimizer (alpha - 1 + T) / (beta + theta S_i) of the
/// cumulative basic loss, i.e. the posterior mode.
inline std::vector<double> cumulative_loss_basic_argmin(const GammaPrior& prior, double theta, std::size_t steps,
                                                        std::span<const double> loss_sums) {
  const double shape = prior.alpha - 1.0 + static_cast<double>(steps);
  if (!(shape > 0.0)) throw DomainError("cumulative basic loss has no interior minimizer when alpha - 1 + T <= 0");
  std::vector<double> out(loss_sums.size());
  for (std::size_t i = 0; i < loss_sums.size(); ++i) out[i] = shape / (prior.beta + theta * loss_sums[i]);
  return out;
}

inline double cumulative_loss_shape(std::span<const double> lambda, const ShapePrior& prior, double theta,
                                    std::span<const LossVector> history) {
  detail::require_positive(lambda, "weights");
  const double log_a = std::log(prior.a);
  const double log_theta = std::log(theta);
  double v = 0.0;
  for (double l : lambda) v += -(l - 1.0) * log_a - prior.c * l * log_theta + prior.b * std::lgamma(l);
  for (const auto& g : history) v += ensemble_loss_gamma_shape(lambda, g, theta);
  return v;
}

inline double cumulative_loss_shape_rate(std::span<const double> alpha, std::span<const double> beta,
                                         const ShapeRatePrior& prior, std::span<const LossVector> history) {
  detail::require_positive(alpha, "shape weights");
  detail::require_positive(beta, "rate weights");
  const double log_p = std::log(prior.p);
  double v = 0.0;
  for (std::size_t i = 0; i < alpha.size(); ++i)
    v += -(alpha[i] - 1.0) * log_p + prior.q * beta[i] + prior.r * std::lgamma(alpha[i]) -
         alpha[i] * prior.s * std::log(beta[i]);
  for (const auto& g : history) v += ensemble_loss_gamma_shape_rate(alpha, beta, g);
  return v;
}

}  // namespace bayesens
