/**
 * Copyright 2026 The maliot Authors.
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */


#include <gtest/gtest.h>

#include <cmath>

#include "maliot/classifiers.hpp"
#include "oracles/finite_diff.hpp"
#include "oracles/gnb_oracle.hpp"
#include "oracles/split_oracle.hpp"

namespace maliot {
namespace {

FeatureMatrix make_matrix(const std::vector<std::vector<double>>& x, const std::vector<int>& y) {
  FeatureMatrix m;
  m.values.resize(static_cast<Eigen::Index>(x.size()), static_cast<Eigen::Index>(x.front().size()));
  for (std::size_t i = 0; i < x.size(); ++i) {
    for (std::size_t j = 0; j < x[i].size(); ++j) {
      m.values(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = x[i][j];
    }
  }
  m.labels = y;
  return m;
}

FeatureVector make_vector(const std::vector<double>& x) {
  FeatureVector v;
  v.values = Eigen::Map<const Eigen::VectorXd>(x.data(), static_cast<Eigen::Index>(x.size()));
  return v;
}

struct Toy {
  std::vector<std::vector<double>> x;
  std::vector<int> y;
};

// Integer-valued features so that ties between candidate splits are common.
Toy random_toy(std::uint64_t seed, std::size_t n, std::size_t d, int levels) {
  Rng rng(seed);
  Toy t;
  for (std::size_t i = 0; i < n; ++i) {
    std::vector<double> row(d);
    for (auto& v : row) v = static_cast<double>(rng.below(static_cast<std::uint64_t>(levels)));
    t.x.push_back(row);
    t.y.push_back(rng.bernoulli(0.4) ? 1 : 0);
  }
  t.y[0] = 0;
  t.y[1] = 1;
  return t;
}

// ---- Gaussian naive Bayes ---------------------------------------------------

TEST(GaussianNb, OneDimensionalExample) {
  const auto m = make_matrix({{0}, {1}, {10}, {11}}, {0, 0, 1, 1});
  const auto model = train(ModelKind::gaussian_nb, m, {}, {});
  const auto& p = std::get<GaussianNbParams>(model.params);
  EXPECT_DOUBLE_EQ(p.means(0, 0), 0.5);
  EXPECT_DOUBLE_EQ(p.means(1, 0), 10.5);
  EXPECT_DOUBLE_EQ(p.variances(0, 0), 0.25);
  EXPECT_EQ(predict(model, make_vector({0.4})).label, Label::benign);
  EXPECT_EQ(predict(model, make_vector({10.6})).label, Label::anomaly);
}

TEST(GaussianNb, MatchesDensityOracle) {
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    Rng rng(seed * 101);
    std::vector<std::vector<double>> x;
    std::vector<int> y;
    for (int i = 0; i < 30; ++i) {
      const int c = i % 3 == 0 ? 1 : 0;
      x.push_back({rng.normal(c * 1.5, 1.0), rng.normal(0, 1 + c), rng.uniform(-1, 1)});
      y.push_back(c);
    }
    const auto model = train(ModelKind::gaussian_nb, make_matrix(x, y), {}, {});
    const auto fit = oracle::gnb_fit(x, y);
    for (int k = 0; k < 20; ++k) {
      const std::vector<double> probe = {rng.uniform(-3, 4), rng.uniform(-3, 3), rng.uniform(-1, 1)};
      const double expect = static_cast<double>(oracle::gnb_posterior(fit, probe));
      EXPECT_NEAR(predict(model, make_vector(probe)).score, expect, 1e-9) << "seed " << seed;
    }
  }
}

TEST(GaussianNb, ZeroVarianceFeatureIsFloored) {
  const auto m = make_matrix({{1, 0}, {1, 1}, {1, 5}, {1, 6}}, {0, 0, 1, 1});
  const auto model = train(ModelKind::gaussian_nb, m, {}, {});
  const auto& p = std::get<GaussianNbParams>(model.params);
  EXPECT_EQ(p.variances(0, 0), 1e-9);
  EXPECT_TRUE(std::isfinite(predict(model, make_vector({1, 3})).score));
}

TEST(GaussianNb, AcceptsSingleClassData) {
  const auto m = make_matrix({{0}, {1}, {2}}, {0, 0, 0});
  const auto model = train(ModelKind::gaussian_nb, m, {}, {});
  EXPECT_EQ(predict(model, make_vector({100})).label, Label::benign);
  EXPECT_EQ(predict(model, make_vector({100})).score, 0.0);
}

// ---- Decision tree ----------------------------------------------------------

TEST(DecisionTree, SingleSplitExample) {
  const auto m = make_matrix({{1}, {2}, {10}}, {0, 0, 1});
  const auto model = train(ModelKind::decision_tree, m, {}, {});
  const auto& t = std::get<DecisionTreeParams>(model.params);
  ASSERT_EQ(t.nodes.size(), 3u);
  EXPECT_EQ(t.nodes[0].feature, 0);
  EXPECT_GT(t.nodes[0].threshold, 2.0);
  EXPECT_LT(t.nodes[0].threshold, 10.0);
  EXPECT_EQ(t.depth(), 1);
  EXPECT_EQ(predict(model, make_vector({1.5})).label, Label::benign);
  EXPECT_EQ(predict(model, make_vector({9})).label, Label::anomaly);
}

TEST(DecisionTree, BestSplitMatchesExhaustiveOracle) {
  for (std::uint64_t seed = 1; seed <= 40; ++seed) {
    const Toy t = random_toy(seed, 24, 3, 5);
    const auto m = make_matrix(t.x, t.y);
    std::vector<Eigen::Index> rows(t.x.size());
    std::vector<std::size_t> orows(t.x.size());
    for (std::size_t i = 0; i < rows.size(); ++i) rows[i] = static_cast<Eigen::Index>(orows[i] = i);
    const std::vector<int> features = {0, 1, 2};
    const auto got = best_gini_split(m.values, m.labels, rows, features, 1);
    const auto expect = oracle::best_split(t.x, t.y, orows);
    ASSERT_EQ(got.has_value(), expect.has_value()) << "seed " << seed;
    if (!got) continue;
    EXPECT_EQ(got->feature, expect->feature) << "seed " << seed;
    EXPECT_DOUBLE_EQ(got->threshold, expect->threshold) << "seed " << seed;
  }
}

TEST(DecisionTree, FullTreeMatchesOracleEverywhere) {
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    const Toy t = random_toy(seed + 500, 30, 3, 6);
    const auto model = train(ModelKind::decision_tree, make_matrix(t.x, t.y), {}, {});
    const auto ref = oracle::build_tree(t.x, t.y);
    const auto& tree = std::get<DecisionTreeParams>(model.params);
    EXPECT_EQ(tree.nodes.size(), ref.size()) << "seed " << seed;
    for (double a = -0.5; a <= 6; a += 0.5) {
      for (double b = -0.5; b <= 6; b += 0.5) {
        for (double c = -0.5; c <= 6; c += 1.5) {
          const std::vector<double> probe = {a, b, c};
          ASSERT_DOUBLE_EQ(predict(model, make_vector(probe)).score, oracle::tree_score(ref, probe))
              << "seed " << seed;
        }
      }
    }
  }
}

TEST(DecisionTree, MaxDepthIsRespected) {
  const Toy t = random_toy(3, 60, 4, 10);
  TrainConfig cfg;
  cfg.tree.max_depth = 2;
  const auto model = train(ModelKind::decision_tree, make_matrix(t.x, t.y), cfg, {});
  EXPECT_LE(std::get<DecisionTreeParams>(model.params).depth(), 2);
}

TEST(DecisionTree, MinSamplesLeafIsRespected) {
  const Toy t = random_toy(4, 60, 4, 10);
  TrainConfig cfg;
  cfg.tree.min_samples_leaf = 7;
  const auto m = make_matrix(t.x, t.y);
  const auto model = train(ModelKind::decision_tree, m, cfg, {});
  const auto& tree = std::get<DecisionTreeParams>(model.params);
  std::vector<int> hits(tree.nodes.size(), 0);
  for (const auto& row : t.x) {
    int i = 0;
    while (tree.nodes[static_cast<std::size_t>(i)].feature >= 0) {
      const auto& n = tree.nodes[static_cast<std::size_t>(i)];
      i = row[static_cast<std::size_t>(n.feature)] <= n.threshold ? n.left : n.right;
    }
    ++hits[static_cast<std::size_t>(i)];
  }
  for (std::size_t i = 0; i < tree.nodes.size(); ++i) {
    if (tree.nodes[i].feature < 0) EXPECT_GE(hits[i], 7);
  }
}

// ---- Random forest ----------------------------------------------------------

TEST(RandomForest, DegenerateForestEqualsTree) {
  const Toy t = random_toy(11, 40, 3, 6);
  const auto m = make_matrix(t.x, t.y);
  TrainConfig cfg;
  cfg.forest.n_trees = 1;
  cfg.forest.bootstrap = false;
  cfg.forest.max_features = 3;
  const auto forest = train(ModelKind::random_forest, m, cfg, {});
  const auto tree = train(ModelKind::decision_tree, m, cfg, {});
  const auto& f = std::get<ForestParams>(forest.params);
  const auto& d = std::get<DecisionTreeParams>(tree.params);
  ASSERT_EQ(f.trees.size(), 1u);
  ASSERT_EQ(f.trees[0].nodes.size(), d.nodes.size());
  for (std::size_t i = 0; i < d.nodes.size(); ++i) {
    EXPECT_EQ(f.trees[0].nodes[i].feature, d.nodes[i].feature);
    EXPECT_EQ(f.trees[0].nodes[i].threshold, d.nodes[i].threshold);
  }
}

TEST(RandomForest, ThreadCountDoesNotChangeTheForest) {
  const Toy t = random_toy(12, 80, 5, 8);
  const auto m = make_matrix(t.x, t.y);
  TrainConfig a;
  a.forest.n_trees = 9;
  TrainConfig b = a;
  b.forest.threads = 3;
  EXPECT_EQ(model_to_json(train(ModelKind::random_forest, m, a, {})),
            model_to_json(train(ModelKind::random_forest, m, b, {})));
}

TEST(RandomForest, VoteTieFollowsFailMode) {
  DecisionTreeParams yes, no;
  yes.nodes = {TreeNode{-1, 0, -1, -1, 1.0}};
  no.nodes = {TreeNode{-1, 0, -1, -1, 0.0}};
  TrainedModel m;
  m.kind = ModelKind::random_forest;
  m.width = 1;
  m.params = ForestParams{{yes, no}, false};
  const auto open = predict(m, make_vector({0}));
  EXPECT_EQ(open.score, 0.5);
  EXPECT_EQ(open.label, Label::benign);
  m.params = ForestParams{{yes, no}, true};
  EXPECT_EQ(predict(m, make_vector({0})).label, Label::anomaly);
}

// ---- Linear models ----------------------------------------------------------

FeatureMatrix separable(std::uint64_t seed, int n) {
  Rng rng(seed);
  std::vector<std::vector<double>> x;
  std::vector<int> y;
  for (int i = 0; i < n; ++i) {
    const double a = rng.normal(), b = rng.normal();
    const double margin = a + 0.5 * b;
    if (std::abs(margin) < 0.2) continue;
    x.push_back({a, b, rng.normal()});
    y.push_back(margin > 0 ? 1 : 0);
  }
  return make_matrix(x, y);
}

TEST(LinearModels, LearnSeparableData) {
  const auto m = separable(21, 2000);
  TrainConfig cfg;
  cfg.linear.learning_rate = 0.05;
  cfg.linear.epochs = 20;
  for (auto kind : {ModelKind::logistic_regression, ModelKind::linear_svm}) {
    const auto model = train(kind, m, cfg, {});
    EXPECT_GE(evaluate(model, m).accuracy, 0.97) << to_string(kind);
    const auto& w = std::get<LinearParams>(model.params).weights;
    EXPECT_GT(w[0], 0.0);
    EXPECT_GT(w[0], std::abs(w[2]));
  }
}

TEST(LinearModels, SeedDeterminism) {
  const auto m = separable(22, 500);
  TrainOptions o;
  o.seed = 77;
  EXPECT_EQ(model_to_json(train(ModelKind::logistic_regression, m, {}, o)),
            model_to_json(train(ModelKind::logistic_regression, m, {}, o)));
}

// ---- ANN --------------------------------------------------------------------

MlpParams random_mlp(Rng& rng, Eigen::Index in, Eigen::Index hidden) {
  MlpParams p;
  p.w1 = Eigen::MatrixXd(hidden, in);
  for (Eigen::Index i = 0; i < p.w1.size(); ++i) p.w1.data()[i] = rng.normal(0, 0.7);
  p.b1 = Eigen::VectorXd(hidden);
  for (auto& v : p.b1) v = rng.normal(0, 0.3);
  p.w2 = Eigen::VectorXd(hidden);
  for (auto& v : p.w2) v = rng.normal(0, 0.7);
  p.b2 = rng.normal(0, 0.3);
  return p;
}

std::vector<double> flatten(const MlpParams& p) {
  std::vector<double> out(p.w1.data(), p.w1.data() + p.w1.size());
  out.insert(out.end(), p.b1.begin(), p.b1.end());
  out.insert(out.end(), p.w2.begin(), p.w2.end());
  out.push_back(p.b2);
  return out;
}

MlpParams unflatten(const std::vector<double>& v, Eigen::Index in, Eigen::Index hidden) {
  MlpParams p;
  std::size_t k = 0;
  p.w1 = Eigen::MatrixXd(hidden, in);
  for (Eigen::Index i = 0; i < p.w1.size(); ++i) p.w1.data()[i] = v[k++];
  p.b1 = Eigen::VectorXd(hidden);
  for (auto& x : p.b1) x = v[k++];
  p.w2 = Eigen::VectorXd(hidden);
  for (auto& x : p.w2) x = v[k++];
  p.b2 = v[k];
  return p;
}

std::vector<double> flatten(const MlpGradient& g) {
  std::vector<double> out(g.w1.data(), g.w1.data() + g.w1.size());
  out.insert(out.end(), g.b1.begin(), g.b1.end());
  out.insert(out.end(), g.w2.begin(), g.w2.end());
  out.push_back(g.b2);
  return out;
}

TEST(Ann, BackpropMatchesFiniteDifferences) {
  Rng rng(31);
  const Eigen::Index in = 5, hidden = 7, rows = 6;
  int checked = 0;
  while (checked < 10) {
    const MlpParams p = random_mlp(rng, in, hidden);
    RowMatrix x(rows, in);
    for (Eigen::Index i = 0; i < x.size(); ++i) x.data()[i] = rng.normal();
    Eigen::VectorXd y(rows);
    for (auto& v : y) v = rng.bernoulli(0.5) ? 1.0 : 0.0;
    // ReLU is not differentiable at 0; skip draws that sit on a kink.
    const Eigen::MatrixXd z1 = (x * p.w1.transpose()).rowwise() + p.b1.transpose();
    if ((z1.array().abs() < 1e-3).any()) continue;
    const double reg = 1e-2;
    const auto analytic = flatten(mlp_gradient(p, x, y, reg));
    const auto numeric = oracle::central_gradient(flatten(p), [&](const std::vector<double>& v) {
      return mlp_loss(unflatten(v, in, hidden), x, y, reg);
    });
    EXPECT_LT(oracle::max_relative_error(analytic, numeric), 1e-4);
    ++checked;
  }
}

TEST(Ann, ZeroInitGivesHalfAndBiasGradient) {
  MlpConfig cfg;
  cfg.zero_init = true;
  cfg.dense_units = 4;
  const MlpParams p = init_mlp(3, cfg, 1);
  const double x[3] = {1.0, -2.0, 0.5};
  EXPECT_EQ(mlp_forward(p, x, 3), 0.5);
  RowMatrix xs(4, 3);
  xs.setConstant(0.3);
  Eigen::VectorXd y(4);
  y << 1, 0, 1, 1;
  const auto g = mlp_gradient(p, xs, y, 0.0);
  EXPECT_DOUBLE_EQ(g.b2, (0.5 - 1 + 0.5 - 0 + 0.5 - 1 + 0.5 - 1) / 4.0);
  EXPECT_TRUE(g.w1.isZero());
  EXPECT_TRUE(g.w2.isZero());
}

TEST(Ann, L2TermAddsTwiceRegTimesWeights) {
  Rng rng(8);
  const MlpParams p = random_mlp(rng, 4, 5);
  RowMatrix x(3, 4);
  for (Eigen::Index i = 0; i < x.size(); ++i) x.data()[i] = rng.normal();
  Eigen::VectorXd y(3);
  y << 0, 1, 1;
  const double reg = 0.125;
  const auto with = mlp_gradient(p, x, y, reg);
  const auto without = mlp_gradient(p, x, y, 0.0);
  EXPECT_TRUE((with.w1 - without.w1).isApprox(2 * reg * p.w1, 1e-12));
  EXPECT_TRUE((with.w2 - without.w2).isApprox(2 * reg * p.w2, 1e-12));
  EXPECT_NEAR(with.b2, without.b2, 1e-15);
  EXPECT_TRUE(with.b1.isApprox(without.b1));
}

TEST(Ann, LearnsSeparableData) {
  const auto m = separable(23, 3000);
  TrainConfig cfg;
  cfg.mlp.dense_units = 16;
  cfg.mlp.n_epoch = 10;
  cfg.mlp.learning_rate = 1e-2;
  cfg.mlp.dropout_rate = 0.1;
  const auto model = train(ModelKind::ann, m, cfg, {});
  EXPECT_GE(evaluate(model, m).accuracy, 0.95);
}

TEST(Ann, RejectsBadConfig) {
  TrainConfig cfg;
  cfg.mlp.dropout_rate = 1.0;
  EXPECT_THROW(train(ModelKind::ann, separable(1, 50), cfg, {}), ConfigError);
  cfg.mlp.dropout_rate = 0.5;
  cfg.mlp.dense_units = 0;
  EXPECT_THROW(train(ModelKind::ann, separable(1, 50), cfg, {}), ConfigError);
}

// ---- Shared behavior --------------------------------------------------------

TEST(Metrics, PrecisionRecallF1) {
  Confusion c;
  c.tp = 1;
  c.fp = 1;
  const auto m = metrics_from_confusion(c);
  EXPECT_DOUBLE_EQ(m.precision, 0.5);
  EXPECT_DOUBLE_EQ(m.recall, 1.0);
  EXPECT_NEAR(m.f1, 2.0 / 3.0, 1e-12);
  EXPECT_DOUBLE_EQ(m.accuracy, 0.5);
}

TEST(Metrics, EmptyDenominatorsAreZero) {
  Confusion c;
  c.tn = 5;
  const auto m = metrics_from_confusion(c);
  EXPECT_EQ(m.precision, 0.0);
  EXPECT_EQ(m.recall, 0.0);
  EXPECT_EQ(m.f1, 0.0);
  EXPECT_EQ(m.accuracy, 1.0);
}

TEST(Training, RejectsEmptyAndSingleClassData) {
  const auto one = make_matrix({{1}, {2}, {3}}, {1, 1, 1});
  for (auto kind : kAllModelKinds) {
    if (kind == ModelKind::gaussian_nb) continue;
    EXPECT_THROW(train(kind, one, {}, {}), SingleClassData) << to_string(kind);
  }
  const auto unlabeled = make_matrix({{1}, {2}}, {kUnlabeled, kUnlabeled});
  for (auto kind : kAllModelKinds) EXPECT_THROW(train(kind, unlabeled, {}, {}), EmptyDataset);
}

TEST(Training, UnlabeledRowsAreIgnored) {
  const auto with = make_matrix({{1}, {2}, {10}, {50}}, {0, 0, 1, kUnlabeled});
  const auto without = make_matrix({{1}, {2}, {10}}, {0, 0, 1});
  EXPECT_EQ(model_to_json(train(ModelKind::decision_tree, with, {}, {})),
            model_to_json(train(ModelKind::decision_tree, without, {}, {})));
}

TEST(Training, InputChecks) {
  auto m = make_matrix({{1, 0}, {2, 0}, {10, 1}}, {0, 0, 1});
  m.codec_fingerprint = 0x1234;
  const auto model = train(ModelKind::decision_tree, m, {}, {});
  FeatureVector wrong_width = make_vector({1});
  wrong_width.codec_fingerprint = 0x1234;
  EXPECT_THROW(predict(model, wrong_width), DimensionMismatch);
  FeatureVector wrong_codec = make_vector({1, 0});
  wrong_codec.codec_fingerprint = 0x9999;
  EXPECT_THROW(predict(model, wrong_codec), CodecMismatch);
}

TEST(Training, BatchAgreesWithSingleRow) {
  const auto m = separable(24, 400);
  TrainConfig cfg;
  cfg.mlp.dense_units = 8;
  cfg.forest.n_trees = 5;
  for (auto kind : kAllModelKinds) {
    const auto model = train(kind, m, cfg, {});
    const auto batch = predict_batch(model, m);
    for (Eigen::Index i = 0; i < m.rows(); i += 17) {
      FeatureVector v;
      v.values = m.values.row(i).transpose();
      const auto single = predict(model, v);
      EXPECT_EQ(single.label, batch[static_cast<std::size_t>(i)].label) << to_string(kind);
      EXPECT_NEAR(single.score, batch[static_cast<std::size_t>(i)].score, 1e-12) << to_string(kind);
    }
  }
}

TEST(ModelKinds, NamesAndAliases) {
  for (auto kind : kAllModelKinds) EXPECT_EQ(model_kind_from_string(to_string(kind)), kind);
  EXPECT_EQ(model_kind_from_string("rf"), ModelKind::random_forest);
  EXPECT_EQ(model_kind_from_string("svm"), ModelKind::linear_svm);
  EXPECT_EQ(model_kind_from_string("mlp"), ModelKind::ann);
  EXPECT_THROW(model_kind_from_string("xgboost"), ConfigError);
}

}  // namespace
}  // namespace maliot
