#include <gtest/gtest.h>

#include <set>
#include <sstream>

#include "bayesens/weak.hpp"

using namespace bayesens;

namespace {

WeakLearner perceptron(std::vector<double> w, double b, FeatureIndex dim) {
  auto l = make_learner(LearnerKind::perceptron, FeatureSubset::all(dim));
  auto& p = std::get<PerceptronState>(l.model);
  p.weights = std::move(w);
  p.bias = b;
  return l;
}

std::vector<double> dense(std::initializer_list<double> v) {
  std::vector<double> out{0.0};  // slot 0 unused
  out.insert(out.end(), v);
  return out;
}

Dataset two_class(std::size_t n) {
  Dataset ds;
  ds.dimension = 3;
  for (std::size_t i = 0; i < n; ++i) {
    const bool pos = i % 2 == 0;
    const double v = static_cast<double>(i % 7) * 0.1;
    ds.samples.push_back({pos ? Label::positive : Label::negative, {{1, pos ? 1.0 + v : -1.0 - v}, {2, v}, {3, 0.5}}});
  }
  return ds;
}

}  // namespace

TEST(Subset, DrawsAreSortedNonEmptyInRange) {
  SplitMix64 rng(5);
  for (int i = 0; i < 200; ++i) {
    const auto s = sample_subset(3, {}, rng);
    ASSERT_FALSE(s.indices.empty());
    EXPECT_TRUE(std::is_sorted(s.indices.begin(), s.indices.end()));
    EXPECT_GE(s.indices.front(), 1u);
    EXPECT_LE(s.indices.back(), 3u);
  }
  EXPECT_EQ(sample_subset(4, {0.5, 10, true}, rng), FeatureSubset::all(4));
  EXPECT_THROW(sample_subset(0, {}, rng), ConfigError);
  EXPECT_THROW(sample_subset(4, {0.0, 10, false}, rng), ConfigError);
  EXPECT_THROW(sample_subset(4, {1e-300, 3, false}, rng), ConfigError);
}

TEST(Perceptron, ScoreIsDotProduct) {
  const auto l = perceptron({1.0, -1.0}, 0.0, 2);
  const auto x = dense({2.0, 1.0});
  EXPECT_DOUBLE_EQ(score(l, x), 1.0);
  EXPECT_EQ(predict_label(score(l, x)), Label::positive);
}

TEST(Perceptron, MistakeDrivenUpdate) {
  auto l = perceptron({0.0, 0.0}, 0.0, 2);
  const auto x = dense({1.0, 0.0});
  const auto before = l;
  update(l, x, Label::positive);  // tie predicts +1: correct
  EXPECT_EQ(l, before);
  update(l, x, Label::negative);
  const auto& p = std::get<PerceptronState>(l.model);
  EXPECT_EQ(p.weights, (std::vector<double>{-1.0, 0.0}));
  EXPECT_EQ(p.bias, -1.0);
}

TEST(Perceptron, CorrectPredictionLeavesStateUnchanged) {
  auto l = perceptron({0.5, 2.0}, 0.1, 2);
  const auto before = l;
  update(l, dense({1.0, 1.0}), Label::positive);
  EXPECT_EQ(l, before);
}

TEST(Perceptron, SeparableToyConverges) {
  Dataset ds;
  ds.dimension = 2;
  ds.samples = {{Label::positive, {{1, 1.0}, {2, 2.0}}}, {Label::negative, {{1, 2.0}, {2, -1.0}}}};
  auto l = make_learner(LearnerKind::perceptron, FeatureSubset::all(2));
  DenseRow row(2);
  int passes = 0;
  for (; passes < 50; ++passes) {
    int mistakes = 0;
    for (const auto& s : ds.samples) {
      row.load(s);
      if (predict_label(score(l, row.values())) != s.label) ++mistakes;
      update(l, row.values(), s.label);
    }
    if (mistakes == 0) break;
  }
  EXPECT_LT(passes, 50);
}

TEST(NaiveBayes, UntrainedScoresZero) {
  const auto l = make_learner(LearnerKind::naive_bayes, FeatureSubset::all(2));
  EXPECT_EQ(score(l, dense({3.0, -4.0})), 0.0);
  EXPECT_EQ(predict_label(score(l, dense({3.0, -4.0}))), Label::positive);
}

TEST(NaiveBayes, TwoIdenticalSamplesHitTheFloor) {
  auto l = make_learner(LearnerKind::naive_bayes, FeatureSubset::all(2));
  update(l, dense({1.5, 2.0}), Label::positive);
  update(l, dense({1.5, 2.0}), Label::positive);
  const auto& nb = std::get<NaiveBayesState>(l.model);
  EXPECT_EQ(nb.of(Label::positive).count, 2.0);
  EXPECT_EQ(nb.of(Label::positive).mean, (std::vector<double>{1.5, 2.0}));
  EXPECT_EQ(nb.variance(Label::positive, 0), 1e-9);
  EXPECT_EQ(nb.variance(Label::positive, 1), 1e-9);
}

TEST(NaiveBayes, WelfordMatchesTwoPass) {
  auto l = make_learner(LearnerKind::naive_bayes, FeatureSubset::all(1));
  const std::vector<double> xs{0.3, -1.2, 4.4, 2.0, 0.0, 7.5};
  double mean = 0.0;
  for (double x : xs) {
    update(l, dense({x}), Label::negative);
    mean += x;
  }
  mean /= xs.size();
  double ss = 0.0;
  for (double x : xs) ss += (x - mean) * (x - mean);
  const auto& nb = std::get<NaiveBayesState>(l.model);
  EXPECT_NEAR(nb.of(Label::negative).mean[0], mean, 1e-14);
  EXPECT_NEAR(nb.variance(Label::negative, 0), ss / xs.size(), 1e-13);
}

TEST(NaiveBayes, SymmetricEvidenceScoresZero) {
  auto l = make_learner(LearnerKind::naive_bayes, FeatureSubset::all(1));
  for (double x : {-1.0, 1.0}) {
    update(l, dense({x}), Label::positive);
    update(l, dense({-x}), Label::negative);
  }
  EXPECT_NEAR(score(l, dense({0.7})), 0.0, 1e-15);
}

TEST(NaiveBayes, LogOddsAntisymmetricUnderClassSwap) {
  const auto ds = two_class(40);
  auto a = make_learner(LearnerKind::naive_bayes, FeatureSubset::all(3));
  auto b = make_learner(LearnerKind::naive_bayes, FeatureSubset::all(3));
  DenseRow row(3);
  for (const auto& s : ds.samples) {
    row.load(s);
    update(a, row.values(), s.label);
    update(b, row.values(), flip(s.label));
  }
  for (double x : {-2.0, -0.3, 0.0, 0.8, 1.9}) {
    const auto v = dense({x, 0.2, 0.5});
    EXPECT_NEAR(score(a, v), -score(b, v), 1e-12);
  }
}

TEST(NaiveBayes, LaplacePriorWithOneClassSeen) {
  auto l = make_learner(LearnerKind::naive_bayes, FeatureSubset::all(1));
  update(l, dense({1.0}), Label::positive);
  update(l, dense({2.0}), Label::positive);
  EXPECT_DOUBLE_EQ(score(l, dense({100.0})), std::log(3.0));
}

TEST(Pool, ReproducibleAndDistinct) {
  Dataset train = two_class(20);
  train.dimension = 30;
  PoolSpec spec;
  const auto a = build_pool(train, 30, spec, 17);
  const auto b = build_pool(train, 30, spec, 17);
  EXPECT_EQ(a, b);
  ASSERT_EQ(a.size(), 100u);
  std::set<std::vector<FeatureIndex>> distinct;
  for (const auto& l : a.learners) distinct.insert(l.subset.indices);
  EXPECT_EQ(distinct.size(), 100u);
  EXPECT_NE(build_pool(train, 30, spec, 18), a);
}

TEST(Pool, EmptyTrainOnlyWhenNotFrozen) {
  const Dataset empty{{}, 3, "none"};
  PoolSpec spec;
  spec.m = 4;
  EXPECT_THROW(build_pool(empty, 3, spec, 1), ConfigError);
  spec.frozen = false;
  const auto pool = build_pool(empty, 3, spec, 1);
  EXPECT_EQ(pool.size(), 4u);
  EXPECT_FALSE(pool.frozen);
  for (const auto& l : pool.learners) {
    const auto& p = std::get<PerceptronState>(l.model);
    EXPECT_EQ(p.bias, 0.0);
  }
  spec.m = 0;
  EXPECT_THROW(build_pool(empty, 3, spec, 1), ConfigError);
}

TEST(Pool, SingleAllFeatureLearnerEqualsSingleClassifier) {
  const auto train = two_class(30);
  PoolSpec spec;
  spec.m = 1;
  spec.subset_rule.all_features = true;
  const auto pool = build_pool(train, 3, spec, 9);
  auto single = make_learner(LearnerKind::perceptron, FeatureSubset::all(3));
  pretrain(single, train, 1);
  EXPECT_EQ(pool.learners[0], single);
}

TEST(Pool, SnapshotLayout) {
  PoolSpec spec;
  spec.m = 2;
  spec.kind = LearnerKind::naive_bayes;
  const auto pool = build_pool(two_class(10), 3, spec, 2);
  std::ostringstream os;
  write_pool_snapshot(os, pool);
  const auto text = os.str();
  EXPECT_EQ(text.rfind("pool 2 frozen 1\nlearner 0 naive_bayes\nsubset ", 0), 0u);
  EXPECT_NE(text.find("class +1 5\n"), std::string::npos);
  EXPECT_NE(text.find("learner 1 naive_bayes"), std::string::npos);
}
