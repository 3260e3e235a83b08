#pragma once

// Prequential (test-then-train) experiment runner.
//
// One trial: split the dataset, build and pretrain the pool on the training
// part, then walk the evaluation part in the trial's ordering. At every step
// each method predicts, the label is revealed, the mistake is counted, and
// only then are weights (and, for unfrozen pools, the learners) updated.
// All methods of one trial run in lockstep over the same stream and pool.

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cstdio>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <span>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "bayesens/baselines.hpp"
#include "bayesens/bayes.hpp"
#include "bayesens/data.hpp"
#include "bayesens/errors.hpp"
#include "bayesens/loss.hpp"
#include "bayesens/weak.hpp"

namespace bayesens {

enum class Method { single, voting, sgd, sgd_avg, sag, bayes_basic, bayes_shape, bayes_shape_rate };

inline constexpr Method kAllMethods[] = {Method::single,      Method::voting,      Method::sgd,
                                         Method::sgd_avg,     Method::sag,         Method::bayes_basic,
                                         Method::bayes_shape, Method::bayes_shape_rate};

inline const char* to_string(Method m) {
  switch (m) {
    case Method::single: return "single";
    case Method::voting: return "voting";
    case Method::sgd: return "sgd";
    case Method::sgd_avg: return "sgd_avg";
    case Method::sag: return "sag";
    case Method::bayes_basic: return "bayes_basic";
    case Method::bayes_shape: return "bayes_shape";
    case Method::bayes_shape_rate: return "bayes_shape_rate";
  }
  return "?";
}

inline Method parse_method(std::string_view s) {
  for (auto m : kAllMethods)
    if (s == to_string(m)) return m;
  throw ConfigError("unknown method '" + std::string(s) + "'");
}

inline LearnerKind parse_learner_kind(std::string_view s) {
  if (s == "perceptron") return LearnerKind::perceptron;
  if (s == "naive_bayes" || s == "nb") return LearnerKind::naive_bayes;
  throw ConfigError("unknown learner '" + std::string(s) + "'");
}

struct ExperimentConfig {
  std::string dataset;  // LIBSVM file
  std::string name;     // defaults to the file stem
  std::vector<Method> methods{Method::bayes_basic};
  LearnerKind learner = LearnerKind::perceptron;
  std::optional<BaseLoss> base_loss;  // unset: ramp, or logistic for the shape variants
  bool binary_outputs = true;
  std::size_t m = 100;
  std::size_t trials = 5;
  std::uint64_t seed = 1;
  bool frozen_pool = true;
  double train_fraction = 0.1;
  double subset_probability = 0.5;
  double learning_rate = 1.0;
  double variance_floor = 1e-9;
  int pretrain_epochs = 1;

  double theta = 0.1;
  double alpha0 = 1.0;
  double beta0 = 1.0;

  double gamma = 1.0;
  double sgd_t0 = 0.0;
  double lambda_init = 1.0;
  double sag_multiplier = 1.0;

  double shape_a = 1.0, shape_b = 1.0, shape_c = 1.0;
  double b_cap = 1000.0, c_cap = 1000.0;
  double p = 1.0, q = 1.0, r = 1.5, s = 1.0;
  double r_cap = 200.5, s_cap = 200.0;
  double g_floor = 1e-12;

  std::size_t threads = 0;  // 0: hardware concurrency

  BaseLoss loss_for(Method method) const {
    if (base_loss) return *base_loss;
    return method == Method::bayes_shape || method == Method::bayes_shape_rate ? BaseLoss::logistic : BaseLoss::ramp;
  }

  std::string display_name() const {
    return name.empty() ? std::filesystem::path(dataset).stem().string() : name;
  }

  void validate() const {
    if (dataset.empty()) throw ConfigError("no dataset given");
    if (methods.empty()) throw ConfigError("no methods given");
    if (m < 1) throw ConfigError("m must be >= 1");
    if (trials < 1) throw ConfigError("trials must be >= 1");
    if (!(theta > 0.0)) throw ConfigError("theta must be > 0");
    if (!(alpha0 > 0.0 && beta0 > 0.0)) throw ConfigError("alpha0 and beta0 must be > 0");
    if (!(gamma > 0.0)) throw ConfigError("gamma must be > 0");
    if (!(sgd_t0 >= 0.0)) throw ConfigError("sgd_t0 must be >= 0");
    if (!(lambda_init > 0.0)) throw ConfigError("lambda_init must be > 0");
    if (!(sag_multiplier > 0.0)) throw ConfigError("sag_multiplier must be > 0");
    if (!(shape_a > 0.0 && shape_b > 0.0 && shape_c > 0.0)) throw ConfigError("shape_a, shape_b, shape_c must be > 0");
    if (!(p > 0.0 && q > 0.0 && r > 0.0 && s > 0.0)) throw ConfigError("p, q, r, s must be > 0");
    if (!(s < r)) throw ConfigError("shape-rate prior needs s < r");
    if (!(s_cap < r_cap)) throw ConfigError("shape-rate caps need s_cap < r_cap");
    if (!(g_floor >= 0.0)) throw ConfigError("g_floor must be >= 0");
    if (!(learning_rate > 0.0)) throw ConfigError("learning_rate must be > 0");
    if (!(variance_floor > 0.0)) throw ConfigError("variance_floor must be > 0");
    if (pretrain_epochs < 0) throw ConfigError("pretrain_epochs must be >= 0");
    SplitPlan{train_fraction, seed, trials}.validate();
  }
};

namespace detail {

inline bool parse_bool(std::string_view v, const std::string& key) {
  if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
  if (v == "false" || v == "0" || v == "no" || v == "off") return false;
  throw ConfigError("key '" + key + "': expected a boolean, got '" + std::string(v) + "'");
}

inline double parse_real(std::string_view v, const std::string& key) {
  double out = 0.0;
  if (!parse_double(v, out) || !std::isfinite(out))
    throw ConfigError("key '" + key + "': expected a number, got '" + std::string(v) + "'");
  return out;
}

inline std::uint64_t parse_count(std::string_view v, const std::string& key) {
  std::uint64_t out = 0;
  const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc{} || ptr != v.data() + v.size() || v.empty())
    throw ConfigError("key '" + key + "': expected a non-negative integer, got '" + std::string(v) + "'");
  return out;
}

inline std::vector<std::string> split_list(std::string_view v) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (start <= v.size()) {
    const auto end = std::min(v.find(',', start), v.size());
    const auto item = trim(v.substr(start, end - start));
    if (!item.empty()) out.emplace_back(item);
    start = end + 1;
  }
  return out;
}

}  // namespace detail

/// Applies one `key = value` setting. Unknown keys are errors.
inline void set_config_value(ExperimentConfig& c, const std::string& key, std::string_view value) {
  using namespace detail;
  const auto real = [&] { return parse_real(value, key); };
  const auto count = [&] { return static_cast<std::size_t>(parse_count(value, key)); };
  if (key == "dataset") c.dataset = std::string(value);
  else if (key == "name") c.name = std::string(value);
  else if (key == "methods" || key == "method") {
    c.methods.clear();
    for (const auto& item : split_list(value)) {
      if (item == "all") c.methods.assign(std::begin(kAllMethods), std::end(kAllMethods));
      else c.methods.push_back(parse_method(item));
    }
  } else if (key == "learner") c.learner = parse_learner_kind(value);
  else if (key == "base_loss") c.base_loss = parse_base_loss(value);
  else if (key == "binary_outputs") c.binary_outputs = parse_bool(value, key);
  else if (key == "m") c.m = count();
  else if (key == "trials") c.trials = count();
  else if (key == "seed") c.seed = parse_count(value, key);
  else if (key == "frozen_pool") c.frozen_pool = parse_bool(value, key);
  else if (key == "train_fraction") c.train_fraction = real();
  else if (key == "subset_probability") c.subset_probability = real();
  else if (key == "learning_rate") c.learning_rate = real();
  else if (key == "variance_floor") c.variance_floor = real();
  else if (key == "pretrain_epochs") c.pretrain_epochs = static_cast<int>(count());
  else if (key == "theta") c.theta = real();
  else if (key == "alpha0") c.alpha0 = real();
  else if (key == "beta0") c.beta0 = real();
  else if (key == "gamma") c.gamma = real();
  else if (key == "sgd_t0") c.sgd_t0 = real();
  else if (key == "lambda_init") c.lambda_init = real();
  else if (key == "sag_multiplier") c.sag_multiplier = real();
  else if (key == "shape_a") c.shape_a = real();
  else if (key == "shape_b") c.shape_b = real();
  else if (key == "shape_c") c.shape_c = real();
  else if (key == "b_cap") c.b_cap = real();
  else if (key == "c_cap") c.c_cap = real();
  else if (key == "p") c.p = real();
  else if (key == "q") c.q = real();
  else if (key == "r") c.r = real();
  else if (key == "s") c.s = real();
  else if (key == "r_cap") c.r_cap = real();
  else if (key == "s_cap") c.s_cap = real();
  else if (key == "g_floor") c.g_floor = real();
  else if (key == "threads") c.threads = count();
  else throw ConfigError("unknown configuration key '" + key + "'");
}

/// Flat `key = value` lines; `#` starts a comment. A relative dataset path
/// is resolved against `base_dir`.
inline ExperimentConfig parse_config(std::istream& in, const std::filesystem::path& base_dir = {}) {
  ExperimentConfig c;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    std::string_view v = line;
    if (const auto hash = v.find('#'); hash != std::string_view::npos) v = v.substr(0, hash);
    v = detail::trim(v);
    if (v.empty()) continue;
    const auto eq = v.find('=');
    if (eq == std::string_view::npos)
      throw ConfigError("config line " + std::to_string(line_no) + ": expected 'key = value'");
    const std::string key(detail::trim(v.substr(0, eq)));
    try {
      set_config_value(c, key, detail::trim(v.substr(eq + 1)));
    } catch (const ConfigError& e) {
      throw ConfigError("config line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  if (!c.dataset.empty() && !base_dir.empty() && std::filesystem::path(c.dataset).is_relative())
    c.dataset = (base_dir / c.dataset).lexically_normal().string();
  return c;
}

inline ExperimentConfig load_config(const std::filesystem::path& file) {
  std::ifstream in(file);
  if (!in) throw ConfigError("cannot open config file '" + file.string() + "'");
  return parse_config(in, file.parent_path());
}

inline Dataset load_dataset(const std::string& path, std::string name = {}) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open dataset '" + path + "'");
  return parse_libsvm(in, name.empty() ? std::filesystem::path(path).stem().string() : std::move(name));
}

// --- per-step views and method states ----------------------------------------

/// Everything a method may read when predicting step t: pool scores and the
/// single classifier's score on x_t. The label is not part of it.
struct StepInputs {
  std::span<const double> pool_scores;
  double single_score = 0.0;
};

/// Failure inside a trial, tagged with where it happened.
class TrialError : public std::runtime_error {
 public:
  TrialError(Method method, std::size_t trial, std::size_t step, const std::string& what)
      : std::runtime_error(std::string(to_string(method)) + " trial " + std::to_string(trial) + " step " +
                           std::to_string(step) + ": " + what) {}
};

class WeightMethod {
 public:
  virtual ~WeightMethod() = default;
  virtual Label predict(const StepInputs& in) = 0;
  virtual void update(const StepInputs& in, Label y, std::size_t step) = 0;
};

namespace detail {

inline std::vector<double> outputs(std::span<const double> scores, bool binary) {
  std::vector<double> o(scores.begin(), scores.end());
  if (binary)
    for (auto& v : o) v = static_cast<double>(sign_of(predict_label(v)));
  return o;
}

/// Methods that weight the pool by losses of one base-loss kind.
class LossWeighted : public WeightMethod {
 public:
  LossWeighted(BaseLoss kind, bool binary) : kind_(kind), binary_(binary) {}

 protected:
  void losses(const StepInputs& in) {
    const auto o = outputs(in.pool_scores, binary_);
    pos_.resize(o.size());
    neg_.resize(o.size());
    for (std::size_t i = 0; i < o.size(); ++i) {
      pos_[i] = base_loss(kind_, o[i]);
      neg_[i] = base_loss(kind_, -o[i]);
    }
  }
  std::span<const double> for_label(Label y) const { return y == Label::positive ? pos_ : neg_; }

  BaseLoss kind_;
  bool binary_;
  std::vector<double> pos_, neg_;
};

class SingleMethod final : public WeightMethod {
 public:
  Label predict(const StepInputs& in) override { return predict_label(in.single_score); }
  void update(const StepInputs&, Label, std::size_t) override {}
};

class VotingMethod final : public WeightMethod {
 public:
  Label predict(const StepInputs& in) override {
    long balance = 0;
    for (double s : in.pool_scores) balance += sign_of(predict_label(s));
    return balance >= 0 ? Label::positive : Label::negative;
  }
  void update(const StepInputs&, Label, std::size_t) override {}
};

class SgdMethod final : public LossWeighted {
 public:
  SgdMethod(const ExperimentConfig& c, std::size_t m, BaseLoss kind)
      : LossWeighted(kind, c.binary_outputs), state_(SgdState::make(m, c.gamma, c.theta, c.lambda_init, c.sgd_t0)) {}
  Label predict(const StepInputs& in) override {
    losses(in);
    return bayesens::predict(state_.lambda, pos_, neg_);
  }
  void update(const StepInputs&, Label y, std::size_t) override { sgd_step(state_, for_label(y)); }

 private:
  SgdState state_;
};

class PolyakMethod final : public LossWeighted {
 public:
  PolyakMethod(const ExperimentConfig& c, std::size_t m, BaseLoss kind)
      : LossWeighted(kind, c.binary_outputs),
        state_(PolyakState::make(SgdState::make(m, c.gamma, c.theta, c.lambda_init, c.sgd_t0))) {}
  Label predict(const StepInputs& in) override {
    losses(in);
    return bayesens::predict(state_.lambda_bar, pos_, neg_);
  }
  void update(const StepInputs&, Label y, std::size_t) override { polyak_step(state_, for_label(y)); }

 private:
  PolyakState state_;
};

class SagMethod final : public LossWeighted {
 public:
  SagMethod(const ExperimentConfig& c, std::size_t m, BaseLoss kind, std::size_t horizon)
      : LossWeighted(kind, c.binary_outputs),
        state_(SagState::make(m, horizon, c.theta, c.lambda_init, c.sag_multiplier)) {}
  Label predict(const StepInputs& in) override {
    losses(in);
    return bayesens::predict(state_.lambda, pos_, neg_);
  }
  void update(const StepInputs&, Label y, std::size_t step) override { sag_step(state_, for_label(y), step); }

 private:
  SagState state_;
};

class BayesBasicMethod final : public LossWeighted {
 public:
  BayesBasicMethod(const ExperimentConfig& c, std::size_t m, BaseLoss kind)
      : LossWeighted(kind, c.binary_outputs), state_(GammaPosterior::make(m, {c.alpha0, c.beta0}, c.theta)) {}
  Label predict(const StepInputs& in) override {
    losses(in);
    return bayesens::predict(posterior_mean_closed(state_).lambda, pos_, neg_);
  }
  void update(const StepInputs&, Label y, std::size_t) override { update_closed_form(state_, for_label(y)); }

 private:
  GammaPosterior state_;
};

class BayesShapeMethod final : public LossWeighted {
 public:
  BayesShapeMethod(const ExperimentConfig& c, std::size_t m, BaseLoss kind)
      : LossWeighted(kind, c.binary_outputs), state_(ShapePosterior::make(m, {c.shape_a, c.shape_b, c.shape_c}, c.theta)) {
    state_.b_cap = c.b_cap;
    state_.c_cap = c.c_cap;
    state_.g_floor = c.g_floor;
  }
  Label predict(const StepInputs& in) override {
    losses(in);
    if (!estimate_) estimate_ = posterior_mean_shape(state_);
    return predict_shape(estimate_->lambda, pos_, neg_, state_.theta, state_.g_floor);
  }
  void update(const StepInputs&, Label y, std::size_t) override {
    update_shape(state_, for_label(y));
    estimate_.reset();
  }

 private:
  ShapePosterior state_;
  std::optional<WeightEstimate> estimate_;
};

class BayesShapeRateMethod final : public LossWeighted {
 public:
  BayesShapeRateMethod(const ExperimentConfig& c, std::size_t m, BaseLoss kind)
      : LossWeighted(kind, c.binary_outputs), state_(ShapeRatePosterior::make(m, {c.p, c.q, c.r, c.s})) {
    state_.r_cap = c.r_cap;
    state_.s_cap = c.s_cap;
    state_.g_floor = c.g_floor;
  }
  Label predict(const StepInputs& in) override {
    losses(in);
    if (!estimate_) estimate_ = posterior_mean_shape_rate(state_);
    return predict_shape_rate(*estimate_, pos_, neg_, state_.g_floor);
  }
  void update(const StepInputs&, Label y, std::size_t) override {
    update_shape_rate(state_, for_label(y));
    estimate_.reset();
  }

 private:
  ShapeRatePosterior state_;
  std::optional<ShapeRateEstimate> estimate_;
};

}  // namespace detail

inline std::unique_ptr<WeightMethod> make_method(Method method, const ExperimentConfig& c, std::size_t m,
                                                 std::size_t horizon) {
  const auto kind = c.loss_for(method);
  switch (method) {
    case Method::single: return std::make_unique<detail::SingleMethod>();
    case Method::voting: return std::make_unique<detail::VotingMethod>();
    case Method::sgd: return std::make_unique<detail::SgdMethod>(c, m, kind);
    case Method::sgd_avg: return std::make_unique<detail::PolyakMethod>(c, m, kind);
    case Method::sag: return std::make_unique<detail::SagMethod>(c, m, kind, horizon);
    case Method::bayes_basic: return std::make_unique<detail::BayesBasicMethod>(c, m, kind);
    case Method::bayes_shape: return std::make_unique<detail::BayesShapeMethod>(c, m, kind);
    case Method::bayes_shape_rate: return std::make_unique<detail::BayesShapeRateMethod>(c, m, kind);
  }
  throw ConfigError("unknown method");
}

// --- trials ---------------------------------------------------------------

struct TrialRecord {
  std::string dataset;
  Method method = Method::bayes_basic;
  std::size_t trial = 0;
  std::uint64_t seed = 0;
  std::vector<std::uint32_t> cumulative_errors;  // after each step
  std::vector<std::int8_t> predictions;          // +1 / -1 per step
  double wall_seconds = 0.0;                     // shared by all methods of the trial

  std::size_t steps() const noexcept { return cumulative_errors.size(); }
  std::size_t errors() const noexcept { return cumulative_errors.empty() ? 0 : cumulative_errors.back(); }
  double error_rate() const noexcept {
    return steps() == 0 ? 0.0 : static_cast<double>(errors()) / static_cast<double>(steps());
  }
};

/// The pool and single classifier a trial starts from.
struct TrialSetup {
  WeakPool pool;
  WeakLearner single;
};

inline TrialSetup make_trial_setup(const ExperimentConfig& c, const Dataset& train, FeatureIndex dimension,
                                   std::size_t trial) {
  PoolSpec spec;
  spec.m = c.m;
  spec.kind = c.learner;
  spec.subset_rule.inclusion_probability = c.subset_probability;
  spec.learner = {c.learning_rate, c.variance_floor, c.pretrain_epochs};
  spec.frozen = c.frozen_pool;
  TrialSetup setup{build_pool(train, dimension, spec, derive_seed(c.seed, Stream::pool, trial)),
                   make_learner(c.learner, FeatureSubset::all(dimension), spec.learner)};
  if (!train.empty()) pretrain(setup.single, train, c.pretrain_epochs);
  return setup;
}

/// Runs every configured method over `eval` in `order`, starting from `setup`.
inline std::vector<TrialRecord> run_stream(const ExperimentConfig& c, TrialSetup setup, const Dataset& eval,
                                           std::span<const std::size_t> order, std::size_t trial) {
  if (eval.empty() || order.empty()) throw ConfigError("evaluation stream is empty");
  const auto start = std::chrono::steady_clock::now();
  const std::size_t m = setup.pool.size();

  std::vector<std::unique_ptr<WeightMethod>> methods;
  std::vector<TrialRecord> records;
  for (auto method : c.methods) {
    methods.push_back(make_method(method, c, m, order.size()));
    TrialRecord rec;
    rec.dataset = c.display_name();
    rec.method = method;
    rec.trial = trial;
    rec.seed = c.seed;
    rec.cumulative_errors.reserve(order.size());
    rec.predictions.reserve(order.size());
    records.push_back(std::move(rec));
  }

  DenseRow row(eval.dimension);
  std::vector<double> scores(m);
  for (std::size_t step = 0; step < order.size(); ++step) {
    const Sample& sample = eval.samples.at(order[step]);
    row.load(sample);
    const auto x = row.values();
    for (std::size_t i = 0; i < m; ++i) scores[i] = score(setup.pool.learners[i], x);
    const StepInputs in{scores, score(setup.single, x)};

    for (std::size_t k = 0; k < methods.size(); ++k) {
      Label pred;
      try {
        pred = methods[k]->predict(in);
      } catch (const std::exception& e) {
        throw TrialError(c.methods[k], trial, step, e.what());
      }
      auto& rec = records[k];
      const std::uint32_t prev = rec.cumulative_errors.empty() ? 0 : rec.cumulative_errors.back();
      rec.cumulative_errors.push_back(prev + (pred != sample.label ? 1 : 0));
      rec.predictions.push_back(static_cast<std::int8_t>(sign_of(pred)));
    }
    // label revealed
    for (std::size_t k = 0; k < methods.size(); ++k) {
      try {
        methods[k]->update(in, sample.label, step);
      } catch (const std::exception& e) {
        throw TrialError(c.methods[k], trial, step, e.what());
      }
    }
    if (!setup.pool.frozen) {
      for (auto& l : setup.pool.learners) update(l, x, sample.label);
      update(setup.single, x, sample.label);
    }
  }
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  for (auto& r : records) r.wall_seconds = secs;
  return records;
}

inline std::vector<TrialRecord> run_trial(const ExperimentConfig& c, const Dataset& ds, std::size_t trial) {
  c.validate();
  const auto sp = split(ds, {c.train_fraction, c.seed, c.trials}, trial);
  const auto order = ordering(sp.eval, c.seed, trial);
  auto setup = make_trial_setup(c, sp.train, ds.dimension, trial);
  return run_stream(c, std::move(setup), sp.eval, order, trial);
}

struct MethodSummary {
  Method method = Method::bayes_basic;
  std::vector<TrialRecord> trials;  // by trial index

  double mean_error() const {
    double s = 0.0;
    for (const auto& t : trials) s += t.error_rate();
    return trials.empty() ? 0.0 : s / static_cast<double>(trials.size());
  }
  double std_error() const {
    if (trials.size() < 2) return 0.0;
    const double mu = mean_error();
    double ss = 0.0;
    for (const auto& t : trials) ss += (t.error_rate() - mu) * (t.error_rate() - mu);
    return std::sqrt(ss / static_cast<double>(trials.size() - 1));
  }
};

struct ExperimentSummary {
  std::string dataset;
  std::vector<MethodSummary> methods;
  std::vector<std::string> failures;  // non-empty: partial results

  bool complete() const noexcept { return failures.empty(); }

  const MethodSummary& of(Method m) const {
    for (const auto& s : methods)
      if (s.method == m) return s;
    throw ConfigError(std::string("method ") + to_string(m) + " was not run");
  }
};

/// Runs all trials (concurrently when threads allow). A failing trial does
/// not stop the others; its message lands in `failures`.
inline ExperimentSummary run_experiment(const ExperimentConfig& c, const Dataset& ds) {
  c.validate();
  std::vector<std::optional<std::vector<TrialRecord>>> results(c.trials);
  std::vector<std::string> errors(c.trials);
  std::size_t workers = c.threads ? c.threads : std::max(1u, std::thread::hardware_concurrency());
  workers = std::min(workers, c.trials);

  std::mutex mu;
  std::size_t next = 0;
  auto work = [&] {
    for (;;) {
      std::size_t t;
      {
        std::lock_guard lock(mu);
        if (next >= c.trials) return;
        t = next++;
      }
      try {
        results[t] = run_trial(c, ds, t);
      } catch (const std::exception& e) {
        errors[t] = e.what();
      }
    }
  };
  if (workers <= 1) {
    work();
  } else {
    std::vector<std::thread> pool;
    for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(work);
    for (auto& th : pool) th.join();
  }

  ExperimentSummary summary;
  summary.dataset = c.display_name();
  for (auto method : c.methods) summary.methods.push_back({method, {}});
  for (std::size_t t = 0; t < c.trials; ++t) {
    if (!results[t]) {
      summary.failures.push_back("trial " + std::to_string(t) + ": " + errors[t]);
      continue;
    }
    for (std::size_t k = 0; k < c.methods.size(); ++k) summary.methods[k].trials.push_back(std::move((*results[t])[k]));
  }
  return summary;
}

inline ExperimentSummary run_experiment(const ExperimentConfig& c) {
  return run_experiment(c, load_dataset(c.dataset, c.display_name()));
}

// --- output ---------------------------------------------------------------

namespace detail {

inline std::string fmt_rate(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6f", v);
  return buf;
}

inline std::string safe_name(std::string s) {
  for (auto& ch : s)
    if (!(std::isalnum(static_cast<unsigned char>(ch)) || ch == '-' || ch == '_' || ch == '.')) ch = '_';
  return s;
}

}  // namespace detail

inline constexpr const char* kTrialsHeader = "dataset,method,trial,seed,steps,errors,error_rate";

inline void write_trial_rows(std::ostream& os, const ExperimentSummary& s) {
  for (const auto& ms : s.methods)
    for (const auto& t : ms.trials)
      os << t.dataset << ',' << to_string(t.method) << ',' << t.trial << ',' << t.seed << ',' << t.steps() << ','
         << t.errors() << ',' << detail::fmt_rate(t.error_rate()) << '\n';
}

/// step,cumulative_errors,error_rate with steps counted from 1.
inline void write_curve(std::ostream& os, const TrialRecord& t) {
  os << "step,cumulative_errors,error_rate\n";
  for (std::size_t i = 0; i < t.steps(); ++i)
    os << i + 1 << ',' << t.cumulative_errors[i] << ','
       << detail::fmt_rate(static_cast<double>(t.cumulative_errors[i]) / static_cast<double>(i + 1)) << '\n';
}

/// Trial-averaged cumulative error rate; trials share their eval length.
inline void write_mean_curve(std::ostream& os, const MethodSummary& ms) {
  os << "step,mean_error_rate\n";
  if (ms.trials.empty()) return;
  const auto n = ms.trials.front().steps();
  for (std::size_t i = 0; i < n; ++i) {
    double s = 0.0;
    for (const auto& t : ms.trials) s += static_cast<double>(t.cumulative_errors.at(i)) / static_cast<double>(i + 1);
    os << i + 1 << ',' << detail::fmt_rate(s / static_cast<double>(ms.trials.size())) << '\n';
  }
}

/// Writes trials.csv, summary.csv, timing.csv and curves/ under `dir`.
/// Everything except timing.csv is a pure function of config and seed.
inline void write_outputs(const std::filesystem::path& dir, const std::vector<ExperimentSummary>& summaries) {
  namespace fs = std::filesystem;
  fs::create_directories(dir / "curves");
  std::ofstream trials(dir / "trials.csv");
  std::ofstream summary(dir / "summary.csv");
  std::ofstream timing(dir / "timing.csv");
  trials << kTrialsHeader << '\n';
  summary << "dataset,method,trials,mean_error,std_error,complete\n";
  timing << "dataset,trial,wall_seconds\n";
  for (const auto& s : summaries) {
    write_trial_rows(trials, s);
    for (const auto& ms : s.methods) {
      summary << s.dataset << ',' << to_string(ms.method) << ',' << ms.trials.size() << ','
              << detail::fmt_rate(ms.mean_error()) << ',' << detail::fmt_rate(ms.std_error()) << ','
              << (s.complete() ? 1 : 0) << '\n';
      const auto stem = detail::safe_name(s.dataset) + "_" + to_string(ms.method);
      for (const auto& t : ms.trials) {
        std::ofstream curve(dir / "curves" / (stem + "_trial" + std::to_string(t.trial) + ".csv"));
        write_curve(curve, t);
      }
      std::ofstream mean(dir / "curves" / (stem + "_mean.csv"));
      write_mean_curve(mean, ms);
    }
    if (!s.methods.empty())
      for (const auto& t : s.methods.front().trials) timing << s.dataset << ',' << t.trial << ',' << t.wall_seconds << '\n';
  }
  if (!trials || !summary || !timing) throw ConfigError("failed writing results under '" + dir.string() + "'");
}

// --- report ---------------------------------------------------------------

/// One row of a trials.csv file.
struct TrialRow {
  std::string dataset;
  std::string method;
  std::size_t trial = 0;
  double error_rate = 0.0;
};

inline std::vector<TrialRow> read_trial_rows(std::istream& in) {
  std::vector<TrialRow> rows;
  std::string line;
  if (!std::getline(in, line) || detail::trim(line) != kTrialsHeader)
    throw ParseError(1, "expected trials header '" + std::string(kTrialsHeader) + "'");
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (detail::trim(line).empty()) continue;
    std::vector<std::string> cols;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) cols.push_back(cell);
    if (cols.size() != 7) throw ParseError(line_no, "expected 7 columns");
    TrialRow r{cols[0], cols[1], 0, 0.0};
    r.trial = static_cast<std::size_t>(detail::parse_count(detail::trim(cols[2]), "trial"));
    if (!detail::parse_double(detail::trim(cols[6]), r.error_rate)) throw ParseError(line_no, "bad error_rate");
    rows.push_back(std::move(r));
  }
  return rows;
}

enum class ReportFormat { csv, md };

/// Dataset x method table of mean error over trials, datasets and methods
/// in first-seen order.
inline std::string format_report(const std::vector<TrialRow>& rows, ReportFormat fmt) {
  std::vector<std::string> datasets, methods;
  std::map<std::pair<std::string, std::string>, std::pair<double, std::size_t>> cells;
  for (const auto& r : rows) {
    if (std::find(datasets.begin(), datasets.end(), r.dataset) == datasets.end()) datasets.push_back(r.dataset);
    if (std::find(methods.begin(), methods.end(), r.method) == methods.end()) methods.push_back(r.method);
    auto& c = cells[{r.dataset, r.method}];
    c.first += r.error_rate;
    ++c.second;
  }
  auto cell = [&](const std::string& d, const std::string& m) -> std::string {
    const auto it = cells.find({d, m});
    if (it == cells.end()) return "";
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.3f", it->second.first / static_cast<double>(it->second.second));
    return buf;
  };
  std::ostringstream os;
  if (fmt == ReportFormat::csv) {
    os << "dataset";
    for (const auto& m : methods) os << ',' << m;
    os << '\n';
    for (const auto& d : datasets) {
      os << d;
      for (const auto& m : methods) os << ',' << cell(d, m);
      os << '\n';
    }
    return os.str();
  }
  std::size_t w0 = std::string("dataset").size();
  for (const auto& d : datasets) w0 = std::max(w0, d.size());
  std::vector<std::size_t> widths;
  for (const auto& m : methods) widths.push_back(std::max<std::size_t>(m.size(), 5));
  auto pad = [](const std::string& s, std::size_t w) { return s + std::string(w - std::min(w, s.size()), ' '); };
  os << "| " << pad("dataset", w0);
  for (std::size_t k = 0; k < methods.size(); ++k) os << " | " << pad(methods[k], widths[k]);
  os << " |\n|" << std::string(w0 + 2, '-');
  for (auto w : widths) os << '|' << std::string(w + 1, '-') << ':';
  os << "|\n";
  for (const auto& d : datasets) {
    os << "| " << pad(d, w0);
    for (std::size_t k = 0; k < methods.size(); ++k) os << " | " << pad(cell(d, methods[k]), widths[k]);
    os << " |\n";
  }
  return os.str();
}

inline std::string format_report(const std::vector<ExperimentSummary>& summaries, ReportFormat fmt) {
  std::vector<TrialRow> rows;
  for (const auto& s : summaries)
    for (const auto& ms : s.methods)
      for (const auto& t : ms.trials) rows.push_back({s.dataset, to_string(ms.method), t.trial, t.error_rate()});
  return format_report(rows, fmt);
}

}  // namespace bayesens
