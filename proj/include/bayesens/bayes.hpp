#pragma once

// Bayesian recursive estimation of ensemble weights.
//
// Each posterior keeps O(m) sufficient statistics, never the loss history.
//
//   GammaPosterior      exponential likelihood, Gamma(alpha0, beta0) prior.
//                       Posterior for weight i after t steps is
//                       Gamma(alpha0 + t, beta0 + theta * S_i), S_i = sum_s g_i^s,
//                       with mean (alpha0 + t) / (beta0 + theta * S_i).
//   ShapePosterior      Gamma likelihood with unknown shape lambda_i and
//                       known rate theta; mean by quadrature.
//   ShapeRatePosterior  Gamma likelihood with unknown shape alpha_i and rate
//                       beta_i; beta_i is integrated out analytically and the
//                       alpha_i marginal by quadrature.

#include <algorithm>
#include <charconv>
#include <cmath>
#include <istream>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "bayesens/errors.hpp"
#include "bayesens/loss.hpp"
#include "bayesens/quadrature.hpp"
#include "bayesens/weak.hpp"

namespace bayesens {

struct WeightEstimate {
  std::vector<double> lambda;
};

struct ShapeRateEstimate {
  std::vector<double> alpha;
  std::vector<double> beta;
};

// --- closed form ------------------------------------------------------------

struct GammaPosterior {
  double alpha0 = 1.0;
  double beta0 = 1.0;
  double theta = 0.1;
  std::size_t t = 0;
  std::vector<double> loss_sums;

  static GammaPosterior make(std::size_t m, const GammaPrior& prior = {}, double theta = 0.1) {
    if (!(prior.alpha > 0.0) || !(prior.beta > 0.0)) throw ConfigError("Gamma prior needs alpha0 > 0 and beta0 > 0");
    if (!(theta > 0.0)) throw ConfigError("theta must be > 0");
    return {prior.alpha, prior.beta, theta, 0, std::vector<double>(m, 0.0)};
  }

  std::size_t size() const noexcept { return loss_sums.size(); }
  GammaPrior prior() const noexcept { return {alpha0, beta0}; }

  friend bool operator==(const GammaPosterior&, const GammaPosterior&) = default;
};

/// t <- t + 1, S_i <- S_i + g_i.
inline void update_closed_form(GammaPosterior& state, std::span<const double> g) {
  if (g.size() != state.size()) throw DomainError("loss vector length does not match the posterior");
  require_loss_vector(g);
  for (std::size_t i = 0; i < g.size(); ++i) state.loss_sums[i] += g[i];
  ++state.t;
}

inline GammaPosterior updated(GammaPosterior state, std::span<const double> g) {
  update_closed_form(state, g);
  return state;
}

inline WeightEstimate posterior_mean_closed(const GammaPosterior& s) {
  WeightEstimate est{std::vector<double>(s.size())};
  const double shape = s.alpha0 + static_cast<double>(s.t);
  for (std::size_t i = 0; i < s.size(); ++i) est.lambda[i] = shape / (s.beta0 + s.theta * s.loss_sums[i]);
  return est;
}

/// (alpha0 + t) / (beta0 + theta S_i)^2
inline std::vector<double> posterior_variance_closed(const GammaPosterior& s) {
  std::vector<double> out(s.size());
  const double shape = s.alpha0 + static_cast<double>(s.t);
  for (std::size_t i = 0; i < s.size(); ++i) {
    const double rate = s.beta0 + s.theta * s.loss_sums[i];
    out[i] = shape / (rate * rate);
  }
  return out;
}

/// Posterior mode, which is the minimizer of the cumulative basic loss.
inline std::vector<double> posterior_mode_closed(const GammaPosterior& s) {
  return cumulative_loss_basic_argmin(s.prior(), s.theta, s.t, s.loss_sums);
}

/// +1 iff sum lambda_i g_i(x, +1) <= sum lambda_i g_i(x, -1).
inline Label predict(std::span<const double> lambda, std::span<const double> loss_if_pos,
                     std::span<const double> loss_if_neg) {
  double pos = 0.0, neg = 0.0;
  for (std::size_t i = 0; i < lambda.size(); ++i) {
    pos += lambda[i] * loss_if_pos[i];
    neg += lambda[i] * loss_if_neg[i];
  }
  return pos <= neg ? Label::positive : Label::negative;
}

// --- Gamma shape ------------------------------------------------------------

inline double floor_loss(double g, double g_floor) {
  if (!std::isfinite(g) || g < 0.0) throw DomainError("loss entries must be finite and non-negative");
  const double v = g_floor > 0.0 ? std::max(g, g_floor) : g;
  if (!(v > 0.0)) throw DomainError("zero loss under a Gamma likelihood (set a positive loss floor)");
  return v;
}

struct ShapePosterior {
  ShapePrior prior{};
  double theta = 0.1;
  std::size_t t = 0;
  std::vector<double> log_prod;  // sum_s log g_i^s
  double b_cap = 1000.0;
  double c_cap = 1000.0;
  double g_floor = 1e-12;

  static ShapePosterior make(std::size_t m, const ShapePrior& prior = {}, double theta = 0.1) {
    if (!(prior.a > 0.0 && prior.b > 0.0 && prior.c > 0.0)) throw ConfigError("shape prior needs a, b, c > 0");
    if (!(theta > 0.0)) throw ConfigError("theta must be > 0");
    ShapePosterior s;
    s.prior = prior;
    s.theta = theta;
    s.log_prod.assign(m, 0.0);
    return s;
  }

  std::size_t size() const noexcept { return log_prod.size(); }
  double b_eff() const noexcept { return std::min(prior.b + static_cast<double>(t), b_cap); }
  double c_eff() const noexcept { return std::min(prior.c + static_cast<double>(t), c_cap); }

  friend bool operator==(const ShapePosterior&, const ShapePosterior&) = default;
};

inline void update_shape(ShapePosterior& s, std::span<const double> g) {
  if (g.size() != s.size()) throw DomainError("loss vector length does not match the posterior");
  std::vector<double> logs(g.size());
  for (std::size_t i = 0; i < g.size(); ++i) logs[i] = std::log(floor_loss(g[i], s.g_floor));
  for (std::size_t i = 0; i < g.size(); ++i) s.log_prod[i] += logs[i];
  ++s.t;
}

/// log w_i(l) = (l - 1)(log a + sum log g_i) + c_eff l log theta - b_eff lgamma(l)
inline double shape_log_density(const ShapePosterior& s, std::size_t i, double lambda) {
  return (lambda - 1.0) * (std::log(s.prior.a) + s.log_prod[i]) + s.c_eff() * lambda * std::log(s.theta) -
         s.b_eff() * std::lgamma(lambda);
}

inline WeightEstimate posterior_mean_shape(const ShapePosterior& s, const QuadratureOptions& opt = {}) {
  WeightEstimate est{std::vector<double>(s.size())};
  for (std::size_t i = 0; i < s.size(); ++i)
    est.lambda[i] = log_space_mean([&](double l) { return shape_log_density(s, i, l); }, opt).mean;
  return est;
}

/// +1 iff sum (1 - l_i) log(g_i(x,+1) / g_i(x,-1)) + theta sum (g_i(x,+1) - g_i(x,-1)) <= 0.
inline Label predict_shape(std::span<const double> lambda, std::span<const double> loss_if_pos,
                           std::span<const double> loss_if_neg, double theta, double g_floor = 0.0) {
  double d = 0.0;
  for (std::size_t i = 0; i < lambda.size(); ++i) {
    const double gp = floor_loss(loss_if_pos[i], g_floor);
    const double gn = floor_loss(loss_if_neg[i], g_floor);
    d += (1.0 - lambda[i]) * std::log(gp / gn) + theta * (gp - gn);
  }
  return d <= 0.0 ? Label::positive : Label::negative;
}

// --- Gamma shape-rate -------------------------------------------------------

struct ShapeRatePosterior {
  ShapeRatePrior prior{};
  std::size_t t = 0;
  std::vector<double> log_prod;   // sum_s log g_i^s
  std::vector<double> loss_sums;  // sum_s g_i^s
  double r_cap = 200.5;
  double s_cap = 200.0;
  double g_floor = 1e-12;

  static ShapeRatePosterior make(std::size_t m, const ShapeRatePrior& prior = {}) {
    if (!(prior.p > 0.0 && prior.q > 0.0 && prior.r > 0.0 && prior.s > 0.0))
      throw ConfigError("shape-rate prior needs p, q, r, s > 0");
    if (!(prior.s < prior.r)) throw ConfigError("shape-rate prior needs s < r");
    ShapeRatePosterior st;
    st.prior = prior;
    st.log_prod.assign(m, 0.0);
    st.loss_sums.assign(m, 0.0);
    return st;
  }

  std::size_t size() const noexcept { return log_prod.size(); }
  double r_eff() const noexcept { return std::min(prior.r + static_cast<double>(t), r_cap); }
  double s_eff() const noexcept { return std::min(prior.s + static_cast<double>(t), s_cap); }

  void validate() const {
    if (!(s_eff() < r_eff()))
      throw ConfigError("shape-rate posterior needs s_eff < r_eff (got " + std::to_string(s_eff()) + " vs " +
                        std::to_string(r_eff()) + ")");
  }

  friend bool operator==(const ShapeRatePosterior&, const ShapeRatePosterior&) = default;
};

inline void update_shape_rate(ShapeRatePosterior& s, std::span<const double> g) {
  if (g.size() != s.size()) throw DomainError("loss vector length does not match the posterior");
  std::vector<double> floored(g.size());
  for (std::size_t i = 0; i < g.size(); ++i) floored[i] = floor_loss(g[i], s.g_floor);
  for (std::size_t i = 0; i < g.size(); ++i) {
    s.log_prod[i] += std::log(floored[i]);
    s.loss_sums[i] += floored[i];
  }
  ++s.t;
}

/// Marginal of alpha_i with beta_i integrated out:
/// (a - 1)(log p + L_i) + lgamma(a s_eff + 1) - (a s_eff + 1) log(q + S_i) - r_eff lgamma(a)
inline double shape_rate_log_marginal(const ShapeRatePosterior& s, std::size_t i, double alpha) {
  const double se = s.s_eff();
  return (alpha - 1.0) * (std::log(s.prior.p) + s.log_prod[i]) + std::lgamma(alpha * se + 1.0) -
         (alpha * se + 1.0) * std::log(s.prior.q + s.loss_sums[i]) - s.r_eff() * std::lgamma(alpha);
}

/// Unmarginalized joint log density of (alpha_i, beta_i), up to a constant.
inline double shape_rate_log_joint(const ShapeRatePosterior& s, std::size_t i, double alpha, double beta) {
  return (alpha - 1.0) * (std::log(s.prior.p) + s.log_prod[i]) - (s.prior.q + s.loss_sums[i]) * beta -
         s.r_eff() * std::lgamma(alpha) + alpha * s.s_eff() * std::log(beta);
}

/// E[beta | alpha]: beta | alpha ~ Gamma(alpha s_eff + 1, q + S_i).
inline double shape_rate_conditional_beta_mean(const ShapeRatePosterior& s, std::size_t i, double alpha) {
  return (alpha * s.s_eff() + 1.0) / (s.prior.q + s.loss_sums[i]);
}

inline ShapeRateEstimate posterior_mean_shape_rate(const ShapeRatePosterior& s, const QuadratureOptions& opt = {}) {
  s.validate();
  ShapeRateEstimate est{std::vector<double>(s.size()), std::vector<double>(s.size())};
  for (std::size_t i = 0; i < s.size(); ++i) {
    est.alpha[i] = log_space_mean([&](double a) { return shape_rate_log_marginal(s, i, a); }, opt).mean;
    // linear in alpha, so E[beta] = E[E[beta | alpha]] = E[beta | E[alpha]]
    est.beta[i] = shape_rate_conditional_beta_mean(s, i, est.alpha[i]);
  }
  return est;
}

/// +1 iff sum (1 - a_i) log(g_i(x,+1) / g_i(x,-1)) + sum b_i (g_i(x,+1) - g_i(x,-1)) <= 0.
inline Label predict_shape_rate(const ShapeRateEstimate& est, std::span<const double> loss_if_pos,
                                std::span<const double> loss_if_neg, double g_floor = 0.0) {
  double d = 0.0;
  for (std::size_t i = 0; i < est.alpha.size(); ++i) {
    const double gp = floor_loss(loss_if_pos[i], g_floor);
    const double gn = floor_loss(loss_if_neg[i], g_floor);
    d += (1.0 - est.alpha[i]) * std::log(gp / gn) + est.beta[i] * (gp - gn);
  }
  return d <= 0.0 ? Label::positive : Label::negative;
}

// --- pool-level helpers -----------------------------------------------------

/// Scores of every learner on one sample and the losses each would incur
/// for either label. With `binary_outputs` the score is replaced by its
/// sign (ties +1) before the base loss is taken.
struct PoolLosses {
  std::vector<double> outputs;
  std::vector<double> if_positive;
  std::vector<double> if_negative;

  std::span<const double> for_label(Label y) const noexcept {
    return y == Label::positive ? if_positive : if_negative;
  }
};

inline void evaluate_pool(const WeakPool& pool, std::span<const double> x, BaseLoss kind, bool binary_outputs,
                          PoolLosses& out) {
  const auto m = pool.size();
  out.outputs.resize(m);
  out.if_positive.resize(m);
  out.if_negative.resize(m);
  for (std::size_t i = 0; i < m; ++i) {
    const double s = score(pool.learners[i], x);
    const double o = binary_outputs ? static_cast<double>(sign_of(predict_label(s))) : s;
    out.outputs[i] = o;
    out.if_positive[i] = base_loss(kind, o);
    out.if_negative[i] = base_loss(kind, -o);
  }
}

inline PoolLosses evaluate_pool(const WeakPool& pool, std::span<const double> x, BaseLoss kind,
                                bool binary_outputs = true) {
  PoolLosses out;
  evaluate_pool(pool, x, kind, binary_outputs, out);
  return out;
}

inline Label predict(const WeightEstimate& est, const WeakPool& pool, BaseLoss kind, std::span<const double> x,
                     bool binary_outputs = true) {
  const auto l = evaluate_pool(pool, x, kind, binary_outputs);
  return predict(est.lambda, l.if_positive, l.if_negative);
}

// --- snapshots --------------------------------------------------------------
//
//   gamma_posterior
//   alpha0 <v>  beta0 <v>  theta <v>  t <n>    (one key per line)
//   loss_sums <m> <v>...
//   end
//
// Shape and shape-rate snapshots use the same key/value layout with their own
// hyperparameters, caps, floor and per-weight vectors.

namespace detail {

inline std::string fmt_double(double v) {
  char buf[64];
  const auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, end);
}

inline void write_vector(std::ostream& os, const char* key, const std::vector<double>& v) {
  os << key << ' ' << v.size();
  for (double d : v) os << ' ' << fmt_double(d);
  os << '\n';
}

inline void expect_key(std::istream& is, const char* key) {
  std::string k;
  if (!(is >> k) || k != key) throw ParseError(0, std::string("snapshot: expected '") + key + "', got '" + k + "'");
}

template <typename T>
T read_value(std::istream& is, const char* key) {
  expect_key(is, key);
  T v{};
  if (!(is >> v)) throw ParseError(0, std::string("snapshot: bad value for '") + key + "'");
  return v;
}

inline double read_double(std::istream& is, const char* key) {
  expect_key(is, key);
  std::string tok;
  double v = 0.0;
  if (!(is >> tok) || !parse_double(tok, v)) throw ParseError(0, std::string("snapshot: bad value for '") + key + "'");
  return v;
}

inline std::vector<double> read_vector(std::istream& is, const char* key) {
  const auto n = read_value<std::size_t>(is, key);
  std::vector<double> v(n);
  std::string tok;
  for (auto& d : v)
    if (!(is >> tok) || !parse_double(tok, d)) throw ParseError(0, std::string("snapshot: bad entry in '") + key + "'");
  return v;
}

}  // namespace detail

inline void write_snapshot(std::ostream& os, const GammaPosterior& s) {
  using detail::fmt_double;
  os << "gamma_posterior\n"
     << "alpha0 " << fmt_double(s.alpha0) << "\nbeta0 " << fmt_double(s.beta0) << "\ntheta " << fmt_double(s.theta)
     << "\nt " << s.t << '\n';
  detail::write_vector(os, "loss_sums", s.loss_sums);
  os << "end\n";
}

inline GammaPosterior read_gamma_posterior(std::istream& is) {
  detail::expect_key(is, "gamma_posterior");
  GammaPosterior s;
  s.alpha0 = detail::read_double(is, "alpha0");
  s.beta0 = detail::read_double(is, "beta0");
  s.theta = detail::read_double(is, "theta");
  s.t = detail::read_value<std::size_t>(is, "t");
  s.loss_sums = detail::read_vector(is, "loss_sums");
  detail::expect_key(is, "end");
  return s;
}

inline void write_snapshot(std::ostream& os, const ShapePosterior& s) {
  using detail::fmt_double;
  os << "shape_posterior\n"
     << "a " << fmt_double(s.prior.a) << "\nb " << fmt_double(s.prior.b) << "\nc " << fmt_double(s.prior.c)
     << "\ntheta " << fmt_double(s.theta) << "\nt " << s.t << "\nb_cap " << fmt_double(s.b_cap) << "\nc_cap "
     << fmt_double(s.c_cap) << "\ng_floor " << fmt_double(s.g_floor) << '\n';
  detail::write_vector(os, "log_prod", s.log_prod);
  os << "end\n";
}

inline ShapePosterior read_shape_posterior(std::istream& is) {
  detail::expect_key(is, "shape_posterior");
  ShapePosterior s;
  s.prior.a = detail::read_double(is, "a");
  s.prior.b = detail::read_double(is, "b");
  s.prior.c = detail::read_double(is, "c");
  s.theta = detail::read_double(is, "theta");
  s.t = detail::read_value<std::size_t>(is, "t");
  s.b_cap = detail::read_double(is, "b_cap");
  s.c_cap = detail::read_double(is, "c_cap");
  s.g_floor = detail::read_double(is, "g_floor");
  s.log_prod = detail::read_vector(is, "log_prod");
  detail::expect_key(is, "end");
  return s;
}

inline void write_snapshot(std::ostream& os, const ShapeRatePosterior& s) {
  using detail::fmt_double;
  os << "shape_rate_posterior\n"
     << "p " << fmt_double(s.prior.p) << "\nq " << fmt_double(s.prior.q) << "\nr " << fmt_double(s.prior.r)
     << "\ns " << fmt_double(s.prior.s) << "\nt " << s.t << "\nr_cap " << fmt_double(s.r_cap) << "\ns_cap "
     << fmt_double(s.s_cap) << "\ng_floor " << fmt_double(s.g_floor) << '\n';
  detail::write_vector(os, "log_prod", s.log_prod);
  detail::write_vector(os, "loss_sums", s.loss_sums);
  os << "end\n";
}

inline ShapeRatePosterior read_shape_rate_posterior(std::istream& is) {
  detail::expect_key(is, "shape_rate_posterior");
  ShapeRatePosterior s;
  s.prior.p = detail::read_double(is, "p");
  s.prior.q = detail::read_double(is, "q");
  s.prior.r = detail::read_double(is, "r");
  s.prior.s = detail::read_double(is, "s");
  s.t = detail::read_value<std::size_t>(is, "t");
  s.r_cap = detail::read_double(is, "r_cap");
  s.s_cap = detail::read_double(is, "s_cap");
  s.g_floor = detail::read_double(is, "g_floor");
  s.log_prod = detail::read_vector(is, "log_prod");
  s.loss_sums = detail::read_vector(is, "loss_sums");
  detail::expect_key(is, "end");
  if (s.log_prod.size() != s.loss_sums.size()) throw ParseError(0, "snapshot: vector lengths differ");
  return s;
}

}  // namespace bayesens
