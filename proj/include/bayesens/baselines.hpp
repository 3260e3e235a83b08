#pragma once

// Gradient-based and heuristic competitors to the posterior-mean weights,
// all over the same pool and the basic ensemble loss
// theta * sum(l_i g_i) - sum(log l_i).

#include <algorithm>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "bayesens/errors.hpp"
#include "bayesens/loss.hpp"
#include "bayesens/weak.hpp"

namespace bayesens {

inline constexpr double kLambdaMin = 1e-6;

/// lambda <- lambda - gamma / (t + t0) * (theta g - 1 / lambda), projected to >= lambda_min.
/// With t0 = 0 this is the plain 1/t schedule; a positive offset damps the
/// first few steps, which otherwise drive lambda to the floor and back.
struct SgdState {
  std::vector<double> lambda;
  double gamma = 1.0;
  double theta = 0.1;
  std::size_t t = 1;  // index of the next step
  double t0 = 0.0;
  double lambda_min = kLambdaMin;

  static SgdState make(std::size_t m, double gamma = 1.0, double theta = 0.1, double init = 1.0, double t0 = 0.0) {
    if (!(gamma > 0.0)) throw ConfigError("SGD step constant gamma must be > 0");
    if (!(theta > 0.0)) throw ConfigError("theta must be > 0");
    if (!(init > 0.0)) throw ConfigError("initial weight must be > 0");
    if (!(t0 >= 0.0)) throw ConfigError("step offset t0 must be >= 0");
    SgdState s;
    s.lambda.assign(m, init);
    s.gamma = gamma;
    s.theta = theta;
    s.t0 = t0;
    return s;
  }
};

inline void sgd_step(SgdState& s, std::span<const double> g) {
  if (g.size() != s.lambda.size()) throw DomainError("loss vector length does not match the weights");
  const double rate = s.gamma / (static_cast<double>(s.t) + s.t0);
  for (std::size_t i = 0; i < g.size(); ++i) {
    const double grad = s.theta * g[i] - 1.0 / s.lambda[i];
    s.lambda[i] = std::max(s.lambda[i] - rate * grad, s.lambda_min);
  }
  ++s.t;
}

struct PolyakState {
  SgdState sgd;
  std::vector<double> lambda_bar;
  std::size_t count = 0;  // iterates averaged so far

  static PolyakState make(SgdState sgd) {
    PolyakState p;
    p.lambda_bar = sgd.lambda;
    p.sgd = std::move(sgd);
    return p;
  }
};

inline void polyak_step(PolyakState& s, std::span<const double> g) {
  sgd_step(s.sgd, g);
  ++s.count;
  const double n = static_cast<double>(s.count);
  for (std::size_t i = 0; i < s.lambda_bar.size(); ++i)
    s.lambda_bar[i] = ((n - 1.0) * s.lambda_bar[i] + s.sgd.lambda[i]) / n;
}

/// Stochastic average gradient over a horizon known in advance. Memory
/// slot j holds the last gradient seen for sample j (zero before the first
/// visit). Step size defaults to multiplier / L_est with L_est = 1 / init^2,
/// the per-sample curvature of -log(lambda) at the starting point.
struct SagState {
  std::vector<double> lambda;
  std::vector<std::vector<double>> memory;  // [sample][weight]
  std::vector<double> sum;
  std::vector<bool> seen;
  double theta = 0.1;
  double step_size = 1.0;
  double lambda_min = kLambdaMin;

  std::size_t horizon() const noexcept { return memory.size(); }

  static SagState make(std::size_t m, std::size_t horizon, double theta = 0.1, double init = 1.0,
                       double multiplier = 1.0) {
    if (horizon < 1) throw ConfigError("SAG needs a horizon of at least one sample");
    if (!(theta > 0.0)) throw ConfigError("theta must be > 0");
    if (!(init > 0.0)) throw ConfigError("initial weight must be > 0");
    if (!(multiplier > 0.0)) throw ConfigError("SAG step multiplier must be > 0");
    SagState s;
    s.lambda.assign(m, init);
    s.memory.assign(horizon, std::vector<double>(m, 0.0));
    s.sum.assign(m, 0.0);
    s.seen.assign(horizon, false);
    s.theta = theta;
    const double l_est = 1.0 / (init * init);
    s.step_size = multiplier / l_est;
    return s;
  }
};

inline void sag_step(SagState& s, std::span<const double> g, std::size_t sample_index) {
  if (sample_index >= s.horizon())
    throw DomainError("SAG sample index " + std::to_string(sample_index) + " outside horizon " +
                      std::to_string(s.horizon()));
  if (g.size() != s.lambda.size()) throw DomainError("loss vector length does not match the weights");
  auto& slot = s.memory[sample_index];
  for (std::size_t i = 0; i < g.size(); ++i) {
    const double grad = s.theta * g[i] - 1.0 / s.lambda[i];
    s.sum[i] += grad - slot[i];
    slot[i] = grad;
  }
  s.seen[sample_index] = true;
  const double rate = s.step_size / static_cast<double>(s.horizon());
  for (std::size_t i = 0; i < g.size(); ++i) s.lambda[i] = std::max(s.lambda[i] - rate * s.sum[i], s.lambda_min);
}

/// Majority of sign(score_i); ties go to +1.
inline Label voting_predict(const WeakPool& pool, std::span<const double> x) {
  long balance = 0;
  for (const auto& l : pool.learners) balance += sign_of(predict_label(score(l, x)));
  return balance >= 0 ? Label::positive : Label::negative;
}

}  // namespace bayesens
