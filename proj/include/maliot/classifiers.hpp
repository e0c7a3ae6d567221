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


#pragma once

#include <Eigen/Dense>
#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "maliot/featurizer.hpp"

namespace maliot {

enum class ModelKind { random_forest, decision_tree, logistic_regression, linear_svm, gaussian_nb, ann };

inline constexpr std::array<ModelKind, 6> kAllModelKinds = {
    ModelKind::random_forest, ModelKind::decision_tree, ModelKind::logistic_regression,
    ModelKind::linear_svm,    ModelKind::gaussian_nb,   ModelKind::ann};

std::string_view to_string(ModelKind kind);
/// Accepts the canonical names plus a few aliases (rf, dt, lr, svm, nb, mlp).
ModelKind model_kind_from_string(std::string_view text);

class CorruptModel : public DataError {
 public:
  using DataError::DataError;
};

class VersionMismatch : public DataError {
 public:
  using DataError::DataError;
};

// ---- configuration ------------------------------------------------------

struct TreeConfig {
  int max_depth = 16;
  // A node needs this many samples before a split is attempted.
  int min_samples_split = 2;
  int min_samples_leaf = 1;
  // Score exactly 0.5 (leaf or vote tie) resolves to anomaly when set.
  bool fail_closed = false;
};

struct ForestConfig {
  int n_trees = 100;
  int max_features = 0;  // 0 selects floor(sqrt(width))
  bool bootstrap = true;
  unsigned threads = 1;  // trees are seeded per index, so any thread count gives the same forest
};

struct LinearConfig {
  double learning_rate = 1e-3;
  double decay_rate = 1e-5;
  double l2 = 1e-5;
  int batch_size = 100;
  int epochs = 5;
};

struct NbConfig {
  double var_floor = 1e-9;
};

/// Shallow network hyper-parameters; defaults are the published ANN values.
struct MlpConfig {
  double learning_rate = 1e-3;
  double decay_rate = 1e-5;
  double dropout_rate = 0.5;
  int dense_units = 128;
  int n_batch = 100;
  int n_epoch = 1;
  double clf_reg = 1e-5;
  bool zero_init = false;

  void validate() const;
};

struct TrainConfig {
  TreeConfig tree;
  ForestConfig forest;
  LinearConfig linear;
  NbConfig nb;
  MlpConfig mlp;
};

// ---- parameters ---------------------------------------------------------

struct TreeNode {
  int feature = -1;  // -1 marks a leaf
  double threshold = 0.0;  // go left when x[feature] <= threshold
  int left = -1;
  int right = -1;
  double score = 0.0;  // anomaly fraction of the training samples at this node
};

struct DecisionTreeParams {
  std::vector<TreeNode> nodes;
  bool fail_closed = false;

  double score(const double* x) const noexcept;
  int depth() const;
};

struct ForestParams {
  std::vector<DecisionTreeParams> trees;
  bool fail_closed = false;
};

struct LinearParams {
  Eigen::VectorXd weights;
  double bias = 0.0;
};

struct GaussianNbParams {
  // Row 0 benign, row 1 anomaly.
  Eigen::Matrix<double, 2, Eigen::Dynamic> means;
  Eigen::Matrix<double, 2, Eigen::Dynamic> variances;
  Eigen::Vector2d class_counts;
  // Derived from the above by refresh_derived().
  Eigen::Vector2d log_priors;  // -inf for a class absent from training data
  Eigen::Vector2d log_norm;    // sum over features of log(2*pi*var)

  void refresh_derived();
};

struct MlpParams {
  Eigen::MatrixXd w1;  // hidden x input
  Eigen::VectorXd b1;
  Eigen::VectorXd w2;  // hidden
  double b2 = 0.0;
};

using ModelParams =
    std::variant<DecisionTreeParams, ForestParams, LinearParams, GaussianNbParams, MlpParams>;

/// Immutable after training; safe to share between threads for prediction.
struct TrainedModel {
  ModelKind kind = ModelKind::decision_tree;
  ModelParams params;
  std::uint64_t codec_fingerprint = 0;
  Eigen::Index width = 0;
  std::int64_t version = 1;
  double trained_at = 0.0;  // seconds since epoch; 0 when not stamped
};

struct Prediction {
  Label label = Label::benign;
  double score = 0.0;

  bool operator==(const Prediction&) const = default;
};

struct Confusion {
  std::size_t tp = 0, fp = 0, tn = 0, fn = 0;
  std::size_t total() const { return tp + fp + tn + fn; }
};

struct Metrics {
  double accuracy = 0, precision = 0, recall = 0, f1 = 0;
  Confusion confusion;
};

Metrics metrics_from_confusion(const Confusion& c);

struct TrainOptions {
  std::uint64_t seed = 1;
  std::int64_t version = 1;
  double trained_at = 0.0;
};

TrainedModel train(ModelKind kind, const FeatureMatrix& data, const TrainConfig& config,
                   const TrainOptions& options);

Prediction predict(const TrainedModel& model, const FeatureVector& x);
std::vector<Prediction> predict_batch(const TrainedModel& model, const FeatureMatrix& xs);

/// Labeled rows only; anomaly is the positive class.
Metrics evaluate(const TrainedModel& model, const FeatureMatrix& data);

std::string model_to_json(const TrainedModel& model);
TrainedModel model_from_json(std::string_view text);
void save_model(const TrainedModel& model, const std::filesystem::path& path);
TrainedModel load_model(const std::filesystem::path& path);

// ---- per-kind building blocks (exposed for tests) ---------------------------

struct SplitChoice {
  int feature = -1;
  double threshold = 0.0;
  double gain = 0.0;  // sum over children of (a^2 + b^2) / n; larger is purer
};

/// Best Gini split over the listed candidate features (ascending index order
/// breaks ties toward the lower feature, then the lower threshold).
std::optional<SplitChoice> best_gini_split(const RowMatrix& x, std::span<const int> labels,
                                           std::span<const Eigen::Index> rows,
                                           std::span<const int> features, int min_samples_leaf);

DecisionTreeParams fit_tree(const RowMatrix& x, std::span<const int> labels,
                            std::vector<Eigen::Index> rows, const TreeConfig& config,
                            int max_features, Rng* feature_rng);

ForestParams fit_forest(const FeatureMatrix& data, const TreeConfig& tree, const ForestConfig& forest,
                        std::uint64_t seed);

GaussianNbParams fit_gaussian_nb(const FeatureMatrix& data, const NbConfig& config);
double gaussian_nb_score(const GaussianNbParams& p, const double* x) noexcept;

enum class LinearLoss { logistic, hinge };
LinearParams fit_linear(const FeatureMatrix& data, LinearLoss loss, const LinearConfig& config,
                        std::uint64_t seed);

MlpParams init_mlp(Eigen::Index input_width, const MlpConfig& config, std::uint64_t seed);
MlpParams fit_mlp(const FeatureMatrix& data, const MlpConfig& config, std::uint64_t seed);
double mlp_forward(const MlpParams& p, const double* x, Eigen::Index width) noexcept;

struct MlpGradient {
  Eigen::MatrixXd w1;
  Eigen::VectorXd b1;
  Eigen::VectorXd w2;
  double b2 = 0.0;
};

/// Mean binary cross-entropy over the batch plus clf_reg * (|W1|^2 + |w2|^2).
/// Dropout is not applied.
double mlp_loss(const MlpParams& p, const RowMatrix& x, const Eigen::VectorXd& y, double clf_reg);
MlpGradient mlp_gradient(const MlpParams& p, const RowMatrix& x, const Eigen::VectorXd& y,
                         double clf_reg);

}  // namespace maliot
