#pragma once

// Online weak learners over random feature subsets: a mistake-driven
// Perceptron and a Gaussian Naive Bayes with running moments.

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <ostream>
#include <span>
#include <string>
#include <type_traits>
#include <variant>
#include <vector>

#include "bayesens/data.hpp"
#include "bayesens/errors.hpp"
#include "bayesens/rng.hpp"

namespace bayesens {

struct FeatureSubset {
  std::vector<FeatureIndex> indices;  // sorted, non-empty, all in [1, dimension]

  static FeatureSubset all(FeatureIndex dimension) {
    FeatureSubset s;
    s.indices.resize(dimension);
    for (FeatureIndex i = 0; i < dimension; ++i) s.indices[i] = i + 1;
    return s;
  }

  std::size_t size() const noexcept { return indices.size(); }
  friend bool operator==(const FeatureSubset&, const FeatureSubset&) = default;
};

/// Each feature kept independently with `inclusion_probability`; empty draws
/// are redrawn up to `max_attempts` times.
struct SubsetRule {
  double inclusion_probability = 0.5;
  int max_attempts = 1000;
  bool all_features = false;
};

inline FeatureSubset sample_subset(FeatureIndex dimension, const SubsetRule& rule, SplitMix64& rng) {
  if (dimension == 0) throw ConfigError("cannot draw a feature subset from a zero-dimensional dataset");
  if (rule.all_features) return FeatureSubset::all(dimension);
  if (!(rule.inclusion_probability > 0.0 && rule.inclusion_probability <= 1.0))
    throw ConfigError("subset inclusion probability must lie in (0, 1]");
  for (int attempt = 0; attempt < rule.max_attempts; ++attempt) {
    FeatureSubset s;
    for (FeatureIndex i = 1; i <= dimension; ++i)
      if (rng.uniform() < rule.inclusion_probability) s.indices.push_back(i);
    if (!s.indices.empty()) return s;
  }
  throw ConfigError("feature subset stayed empty after " + std::to_string(rule.max_attempts) + " draws");
}

struct PerceptronState {
  std::vector<double> weights;  // one per subset feature
  double bias = 0.0;
  double learning_rate = 1.0;

  friend bool operator==(const PerceptronState&, const PerceptronState&) = default;
};

/// Running count, mean and sum of squared deviations (Welford) per feature.
struct ClassMoments {
  double count = 0.0;
  std::vector<double> mean;
  std::vector<double> m2;

  friend bool operator==(const ClassMoments&, const ClassMoments&) = default;
};

struct NaiveBayesState {
  std::array<ClassMoments, 2> classes;  // [0] = -1, [1] = +1
  double variance_floor = 1e-9;

  const ClassMoments& of(Label y) const noexcept { return classes[y == Label::positive ? 1 : 0]; }
  ClassMoments& of(Label y) noexcept { return classes[y == Label::positive ? 1 : 0]; }

  /// max(M2 / n, floor); floor when the class is empty.
  double variance(Label y, std::size_t k) const noexcept {
    const auto& c = of(y);
    if (c.count <= 0.0) return variance_floor;
    return std::max(c.m2[k] / c.count, variance_floor);
  }

  friend bool operator==(const NaiveBayesState&, const NaiveBayesState&) = default;
};

enum class LearnerKind { perceptron, naive_bayes };

inline const char* to_string(LearnerKind k) {
  return k == LearnerKind::perceptron ? "perceptron" : "naive_bayes";
}

struct LearnerOptions {
  double learning_rate = 1.0;
  double variance_floor = 1e-9;
  int pretrain_epochs = 1;
};

struct WeakLearner {
  FeatureSubset subset;
  std::variant<PerceptronState, NaiveBayesState> model;

  LearnerKind kind() const noexcept {
    return std::holds_alternative<PerceptronState>(model) ? LearnerKind::perceptron : LearnerKind::naive_bayes;
  }

  friend bool operator==(const WeakLearner&, const WeakLearner&) = default;
};

inline WeakLearner make_learner(LearnerKind kind, FeatureSubset subset, const LearnerOptions& opt = {}) {
  const auto k = subset.size();
  WeakLearner l{std::move(subset), PerceptronState{}};
  if (kind == LearnerKind::perceptron) {
    l.model = PerceptronState{std::vector<double>(k, 0.0), 0.0, opt.learning_rate};
  } else {
    NaiveBayesState nb;
    nb.variance_floor = opt.variance_floor;
    for (auto& c : nb.classes) {
      c.mean.assign(k, 0.0);
      c.m2.assign(k, 0.0);
    }
    l.model = std::move(nb);
  }
  return l;
}

/// Ties (score exactly 0) predict +1 everywhere in the library.
constexpr Label predict_label(double score) noexcept { return score >= 0.0 ? Label::positive : Label::negative; }

namespace detail {

inline double perceptron_score(const PerceptronState& p, const FeatureSubset& s, std::span<const double> x) {
  double acc = p.bias;
  for (std::size_t k = 0; k < s.indices.size(); ++k) {
    const auto idx = s.indices[k];
    if (idx < x.size()) acc += p.weights[k] * x[idx];
  }
  return acc;
}

inline double nb_score(const NaiveBayesState& nb, const FeatureSubset& s, std::span<const double> x) {
  const auto& pos = nb.of(Label::positive);
  const auto& neg = nb.of(Label::negative);
  // Laplace add-one class prior; the shared (N + 2) denominator cancels.
  double score = std::log(pos.count + 1.0) - std::log(neg.count + 1.0);
  if (pos.count <= 0.0 || neg.count <= 0.0) return score;
  for (std::size_t k = 0; k < s.indices.size(); ++k) {
    const auto idx = s.indices[k];
    const double xv = idx < x.size() ? x[idx] : 0.0;
    const double vp = nb.variance(Label::positive, k);
    const double vn = nb.variance(Label::negative, k);
    const double dp = xv - pos.mean[k];
    const double dn = xv - neg.mean[k];
    score += -0.5 * std::log(vp) - dp * dp / (2.0 * vp) + 0.5 * std::log(vn) + dn * dn / (2.0 * vn);
  }
  return score;
}

}  // namespace detail

/// Perceptron: w.x + b over the subset. Naive Bayes: log P(+1|x) - log P(-1|x).
inline double score(const WeakLearner& l, std::span<const double> x) {
  return std::visit(
      [&](const auto& m) {
        if constexpr (std::is_same_v<std::decay_t<decltype(m)>, PerceptronState>)
          return detail::perceptron_score(m, l.subset, x);
        else
          return detail::nb_score(m, l.subset, x);
      },
      l.model);
}

inline void update(WeakLearner& l, std::span<const double> x, Label y) {
  if (auto* p = std::get_if<PerceptronState>(&l.model)) {
    if (predict_label(detail::perceptron_score(*p, l.subset, x)) == y) return;
    const double step = p->learning_rate * sign_of(y);
    for (std::size_t k = 0; k < l.subset.indices.size(); ++k) {
      const auto idx = l.subset.indices[k];
      if (idx < x.size()) p->weights[k] += step * x[idx];
    }
    p->bias += step;
    return;
  }
  auto& c = std::get<NaiveBayesState>(l.model).of(y);
  c.count += 1.0;
  for (std::size_t k = 0; k < l.subset.indices.size(); ++k) {
    const auto idx = l.subset.indices[k];
    const double xv = idx < x.size() ? x[idx] : 0.0;
    const double delta = xv - c.mean[k];
    c.mean[k] += delta / c.count;
    c.m2[k] += delta * (xv - c.mean[k]);
  }
}

inline void pretrain(WeakLearner& l, const Dataset& train, int epochs) {
  DenseRow row(train.dimension);
  for (int e = 0; e < epochs; ++e) {
    for (const auto& s : train.samples) {
      row.load(s);
      update(l, row.values(), s.label);
    }
  }
}

struct WeakPool {
  std::vector<WeakLearner> learners;
  bool frozen = true;

  std::size_t size() const noexcept { return learners.size(); }
  friend bool operator==(const WeakPool&, const WeakPool&) = default;
};

struct PoolSpec {
  std::size_t m = 100;
  LearnerKind kind = LearnerKind::perceptron;
  SubsetRule subset_rule{};
  LearnerOptions learner{};
  bool frozen = true;
};

/// Draws m subsets from `seed`, then pretrains each learner on `train`
/// (restricted to its subset) when the training set is non-empty.
inline WeakPool build_pool(const Dataset& train, FeatureIndex dimension, const PoolSpec& spec, std::uint64_t seed) {
  if (spec.m < 1) throw ConfigError("pool size m must be >= 1");
  if (train.empty() && spec.frozen) throw ConfigError("a frozen pool needs a non-empty training set");
  SplitMix64 rng(seed);
  WeakPool pool;
  pool.frozen = spec.frozen;
  pool.learners.reserve(spec.m);
  for (std::size_t i = 0; i < spec.m; ++i)
    pool.learners.push_back(make_learner(spec.kind, sample_subset(dimension, spec.subset_rule, rng), spec.learner));
  if (!train.empty())
    for (auto& l : pool.learners) pretrain(l, train, spec.learner.pretrain_epochs);
  return pool;
}

/// Debug snapshot, one block per learner:
///
///   pool <m> frozen <0|1>
///   learner <i> perceptron|naive_bayes
///   subset <k> <idx>...
///   perceptron: bias <b> / rate <eta> / weights <w>...
///   naive_bayes: floor <v> / class <+1|-1> <count> / mean <..> / m2 <..>  (twice)
///   end
inline void write_pool_snapshot(std::ostream& os, const WeakPool& pool) {
  auto num = [](double v) {
    char buf[64];
    const auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, end);
  };
  auto vec = [&](const std::vector<double>& v) {
    std::string s;
    for (double d : v) s += ' ' + num(d);
    return s;
  };
  os << "pool " << pool.size() << " frozen " << (pool.frozen ? 1 : 0) << '\n';
  for (std::size_t i = 0; i < pool.size(); ++i) {
    const auto& l = pool.learners[i];
    os << "learner " << i << ' ' << to_string(l.kind()) << '\n';
    os << "subset " << l.subset.size();
    for (auto idx : l.subset.indices) os << ' ' << idx;
    os << '\n';
    if (const auto* p = std::get_if<PerceptronState>(&l.model)) {
      os << "bias " << num(p->bias) << '\n' << "rate " << num(p->learning_rate) << '\n';
      os << "weights" << vec(p->weights) << '\n';
    } else {
      const auto& nb = std::get<NaiveBayesState>(l.model);
      os << "floor " << num(nb.variance_floor) << '\n';
      for (Label y : {Label::positive, Label::negative}) {
        const auto& c = nb.of(y);
        os << "class " << (y == Label::positive ? "+1" : "-1") << ' ' << num(c.count) << '\n';
        os << "mean" << vec(c.mean) << '\n' << "m2" << vec(c.m2) << '\n';
      }
    }
    os << "end\n";
  }
}

}  // namespace bayesens
