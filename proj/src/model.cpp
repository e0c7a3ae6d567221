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


#include <fstream>
#include <numeric>
#include <sstream>

#include "json.hpp"
#include "maliot/classifiers.hpp"
#include "optim.hpp"

namespace maliot {
namespace {

using json = nlohmann::json;

constexpr int kModelFormatVersion = 1;

template <class... Ts>
struct Overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

Label vote_label(double score, bool fail_closed) {
  if (score > 0.5) return Label::anomaly;
  if (score == 0.5 && fail_closed) return Label::anomaly;
  return Label::benign;
}

Label probability_label(double score) { return score >= 0.5 ? Label::anomaly : Label::benign; }

Prediction predict_row(const TrainedModel& m, const double* x) {
  return std::visit(
      Overloaded{
          [&](const DecisionTreeParams& t) {
            const double s = t.score(x);
            return Prediction{vote_label(s, t.fail_closed), s};
          },
          [&](const ForestParams& f) {
            std::size_t votes = 0;
            for (const auto& t : f.trees) {
              votes += vote_label(t.score(x), f.fail_closed) == Label::anomaly ? 1 : 0;
            }
            const double s = static_cast<double>(votes) / static_cast<double>(f.trees.size());
            return Prediction{vote_label(s, f.fail_closed), s};
          },
          [&](const LinearParams& l) {
            const double s = detail::sigmoid(
                Eigen::Map<const Eigen::VectorXd>(x, l.weights.size()).dot(l.weights) + l.bias);
            return Prediction{probability_label(s), s};
          },
          [&](const GaussianNbParams& g) {
            const double s = gaussian_nb_score(g, x);
            return Prediction{probability_label(s), s};
          },
          [&](const MlpParams& p) {
            const double s = mlp_forward(p, x, m.width);
            return Prediction{probability_label(s), s};
          },
      },
      m.params);
}

void check_input(const TrainedModel& m, Eigen::Index width, std::uint64_t fingerprint) {
  if (width != m.width) {
    throw DimensionMismatch("model expects width " + std::to_string(m.width) + ", got " +
                            std::to_string(width));
  }
  if (fingerprint != m.codec_fingerprint) {
    throw CodecMismatch("input was encoded with codec " + to_hex(fingerprint) +
                        " but the model was trained with " + to_hex(m.codec_fingerprint));
  }
}

bool discriminative(ModelKind k) { return k != ModelKind::gaussian_nb; }

// ---- JSON ------------------------------------------------------------------

json vec_json(const double* p, Eigen::Index n) { return std::vector<double>(p, p + n); }

Eigen::VectorXd json_vec(const json& j) {
  const auto v = j.get<std::vector<double>>();
  return Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
}

json tree_json(const DecisionTreeParams& t) {
  std::vector<int> feature, left, right;
  std::vector<double> threshold, score;
  for (const auto& n : t.nodes) {
    feature.push_back(n.feature);
    threshold.push_back(n.threshold);
    left.push_back(n.left);
    right.push_back(n.right);
    score.push_back(n.score);
  }
  return {{"fail_closed", t.fail_closed},
          {"nodes",
           {{"feature", feature},
            {"threshold", threshold},
            {"left", left},
            {"right", right},
            {"score", score}}}};
}

DecisionTreeParams json_tree(const json& j, Eigen::Index width) {
  DecisionTreeParams t;
  t.fail_closed = j.at("fail_closed").get<bool>();
  const auto& n = j.at("nodes");
  const auto feature = n.at("feature").get<std::vector<int>>();
  const auto threshold = n.at("threshold").get<std::vector<double>>();
  const auto left = n.at("left").get<std::vector<int>>();
  const auto right = n.at("right").get<std::vector<int>>();
  const auto score = n.at("score").get<std::vector<double>>();
  const std::size_t count = feature.size();
  if (count == 0 || threshold.size() != count || left.size() != count || right.size() != count ||
      score.size() != count) {
    throw CorruptModel("tree node arrays are inconsistent");
  }
  const int limit = static_cast<int>(count);
  for (std::size_t i = 0; i < count; ++i) {
    if (feature[i] >= 0) {
      // Children always follow their parent, which rules out cycles.
      if (feature[i] >= width || left[i] <= static_cast<int>(i) || right[i] <= static_cast<int>(i) ||
          left[i] >= limit || right[i] >= limit) {
        throw CorruptModel("tree node " + std::to_string(i) + " is malformed");
      }
    }
    t.nodes.push_back({feature[i], threshold[i], left[i], right[i], score[i]});
  }
  return t;
}

json params_json(const TrainedModel& m) {
  return std::visit(
      Overloaded{
          [](const DecisionTreeParams& t) { return tree_json(t); },
          [](const ForestParams& f) {
            json trees = json::array();
            for (const auto& t : f.trees) trees.push_back(tree_json(t));
            return json{{"fail_closed", f.fail_closed}, {"trees", trees}};
          },
          [](const LinearParams& l) {
            return json{{"weights", vec_json(l.weights.data(), l.weights.size())}, {"bias", l.bias}};
          },
          [](const GaussianNbParams& g) {
            json means = json::array();
            json vars = json::array();
            for (int c = 0; c < 2; ++c) {
              const Eigen::RowVectorXd mr = g.means.row(c);
              const Eigen::RowVectorXd vr = g.variances.row(c);
              means.push_back(vec_json(mr.data(), mr.size()));
              vars.push_back(vec_json(vr.data(), vr.size()));
            }
            return json{{"means", means},
                        {"variances", vars},
                        {"class_counts", {g.class_counts[0], g.class_counts[1]}}};
          },
          [](const MlpParams& p) {
            // Row-major hidden x input.
            const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> w1 = p.w1;
            return json{{"hidden", p.w1.rows()},
                        {"input", p.w1.cols()},
                        {"w1", vec_json(w1.data(), w1.size())},
                        {"b1", vec_json(p.b1.data(), p.b1.size())},
                        {"w2", vec_json(p.w2.data(), p.w2.size())},
                        {"b2", p.b2}};
          },
      },
      m.params);
}

ModelParams json_params(ModelKind kind, const json& j, Eigen::Index width) {
  switch (kind) {
    case ModelKind::decision_tree: return json_tree(j, width);
    case ModelKind::random_forest: {
      ForestParams f;
      f.fail_closed = j.at("fail_closed").get<bool>();
      for (const auto& t : j.at("trees")) f.trees.push_back(json_tree(t, width));
      if (f.trees.empty()) throw CorruptModel("forest has no trees");
      return f;
    }
    case ModelKind::logistic_regression:
    case ModelKind::linear_svm: {
      LinearParams l;
      l.weights = json_vec(j.at("weights"));
      l.bias = j.at("bias").get<double>();
      if (l.weights.size() != width) throw CorruptModel("weight vector has the wrong width");
      return l;
    }
    case ModelKind::gaussian_nb: {
      GaussianNbParams g;
      g.means.resize(2, width);
      g.variances.resize(2, width);
      for (int c = 0; c < 2; ++c) {
        const auto mr = json_vec(j.at("means").at(c));
        const auto vr = json_vec(j.at("variances").at(c));
        if (mr.size() != width || vr.size() != width) throw CorruptModel("NB statistics have the wrong width");
        g.means.row(c) = mr.transpose();
        g.variances.row(c) = vr.transpose();
        g.class_counts[c] = j.at("class_counts").at(c).get<double>();
      }
      g.refresh_derived();
      return g;
    }
    case ModelKind::ann: {
      MlpParams p;
      const auto hidden = j.at("hidden").get<Eigen::Index>();
      const auto input = j.at("input").get<Eigen::Index>();
      const auto w1 = json_vec(j.at("w1"));
      if (input != width || w1.size() != hidden * input) throw CorruptModel("ANN layer shapes are wrong");
      p.w1 = Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>(
          w1.data(), hidden, input);
      p.b1 = json_vec(j.at("b1"));
      p.w2 = json_vec(j.at("w2"));
      p.b2 = j.at("b2").get<double>();
      if (p.b1.size() != hidden || p.w2.size() != hidden) throw CorruptModel("ANN layer shapes are wrong");
      return p;
    }
  }
  throw CorruptModel("unknown model kind");
}

}  // namespace

std::string_view to_string(ModelKind kind) {
  switch (kind) {
    case ModelKind::random_forest: return "random_forest";
    case ModelKind::decision_tree: return "decision_tree";
    case ModelKind::logistic_regression: return "logistic_regression";
    case ModelKind::linear_svm: return "linear_svm";
    case ModelKind::gaussian_nb: return "gaussian_nb";
    case ModelKind::ann: return "ann";
  }
  return "?";
}

ModelKind model_kind_from_string(std::string_view text) {
  for (auto k : kAllModelKinds) {
    if (text == to_string(k)) return k;
  }
  if (text == "rf") return ModelKind::random_forest;
  if (text == "dt") return ModelKind::decision_tree;
  if (text == "lr") return ModelKind::logistic_regression;
  if (text == "svm" || text == "linear_svc") return ModelKind::linear_svm;
  if (text == "nb" || text == "gnb") return ModelKind::gaussian_nb;
  if (text == "mlp") return ModelKind::ann;
  throw ConfigError("unsupported model kind '" + std::string(text) +
                    "' (supported: random_forest, decision_tree, logistic_regression, linear_svm, "
                    "gaussian_nb, ann)");
}

Metrics metrics_from_confusion(const Confusion& c) {
  Metrics m;
  m.confusion = c;
  const double total = static_cast<double>(c.total());
  m.accuracy = total > 0 ? static_cast<double>(c.tp + c.tn) / total : 0.0;
  m.precision = c.tp + c.fp > 0 ? static_cast<double>(c.tp) / static_cast<double>(c.tp + c.fp) : 0.0;
  m.recall = c.tp + c.fn > 0 ? static_cast<double>(c.tp) / static_cast<double>(c.tp + c.fn) : 0.0;
  m.f1 = m.precision + m.recall > 0 ? 2.0 * m.precision * m.recall / (m.precision + m.recall) : 0.0;
  return m;
}

TrainedModel train(ModelKind kind, const FeatureMatrix& data, const TrainConfig& config,
                   const TrainOptions& options) {
  if (data.cols() < 1) throw DimensionMismatch("training data has zero width");
  if (static_cast<std::size_t>(data.rows()) != data.labels.size()) {
    throw DimensionMismatch("label count does not match row count");
  }
  // Unlabeled rows cannot be used for supervised training.
  std::vector<Eigen::Index> labeled;
  std::size_t anomalies = 0;
  for (Eigen::Index i = 0; i < data.rows(); ++i) {
    const int l = data.labels[static_cast<std::size_t>(i)];
    if (l == 0 || l == 1) {
      labeled.push_back(i);
      anomalies += static_cast<std::size_t>(l);
    }
  }
  if (labeled.size() < 2) throw EmptyDataset("training needs at least 2 labeled rows");
  if (discriminative(kind) && (anomalies == 0 || anomalies == labeled.size())) {
    throw SingleClassData(std::string(to_string(kind)) + " needs both benign and anomaly rows");
  }
  const FeatureMatrix owned =
      labeled.size() == static_cast<std::size_t>(data.rows()) ? FeatureMatrix{} : take_rows(data, labeled);
  const FeatureMatrix& d = labeled.size() == static_cast<std::size_t>(data.rows()) ? data : owned;

  TrainedModel m;
  m.kind = kind;
  m.codec_fingerprint = data.codec_fingerprint;
  m.width = data.cols();
  m.version = options.version;
  m.trained_at = options.trained_at;
  switch (kind) {
    case ModelKind::decision_tree: {
      std::vector<Eigen::Index> rows(static_cast<std::size_t>(d.rows()));
      std::iota(rows.begin(), rows.end(), Eigen::Index{0});
      m.params = fit_tree(d.values, d.labels, std::move(rows), config.tree, 0, nullptr);
      break;
    }
    case ModelKind::random_forest:
      m.params = fit_forest(d, config.tree, config.forest, options.seed);
      break;
    case ModelKind::logistic_regression:
      m.params = fit_linear(d, LinearLoss::logistic, config.linear, options.seed);
      break;
    case ModelKind::linear_svm:
      m.params = fit_linear(d, LinearLoss::hinge, config.linear, options.seed);
      break;
    case ModelKind::gaussian_nb:
      m.params = fit_gaussian_nb(d, config.nb);
      break;
    case ModelKind::ann:
      m.params = fit_mlp(d, config.mlp, options.seed);
      break;
  }
  return m;
}

Prediction predict(const TrainedModel& model, const FeatureVector& x) {
  check_input(model, x.values.size(), x.codec_fingerprint);
  return predict_row(model, x.values.data());
}

std::vector<Prediction> predict_batch(const TrainedModel& model, const FeatureMatrix& xs) {
  check_input(model, xs.cols(), xs.codec_fingerprint);
  const Eigen::Index n = xs.rows();
  std::vector<Prediction> out(static_cast<std::size_t>(n));
  if (const auto* l = std::get_if<LinearParams>(&model.params)) {
    const Eigen::VectorXd z = (xs.values * l->weights).array() + l->bias;
    for (Eigen::Index i = 0; i < n; ++i) {
      const double s = detail::sigmoid(z[i]);
      out[static_cast<std::size_t>(i)] = {probability_label(s), s};
    }
    return out;
  }
  if (const auto* p = std::get_if<MlpParams>(&model.params)) {
    const Eigen::MatrixXd h = ((xs.values * p->w1.transpose()).rowwise() + p->b1.transpose()).cwiseMax(0.0);
    const Eigen::VectorXd z = (h * p->w2).array() + p->b2;
    for (Eigen::Index i = 0; i < n; ++i) {
      const double s = detail::sigmoid(z[i]);
      out[static_cast<std::size_t>(i)] = {probability_label(s), s};
    }
    return out;
  }
  for (Eigen::Index i = 0; i < n; ++i) {
    out[static_cast<std::size_t>(i)] = predict_row(model, xs.values.row(i).data());
  }
  return out;
}

Metrics evaluate(const TrainedModel& model, const FeatureMatrix& data) {
  const auto preds = predict_batch(model, data);
  Confusion c;
  for (std::size_t i = 0; i < preds.size(); ++i) {
    const int truth = data.labels[i];
    if (truth == kUnlabeled) continue;
    const bool predicted = preds[i].label == Label::anomaly;
    if (truth == 1) {
      (predicted ? c.tp : c.fn) += 1;
    } else {
      (predicted ? c.fp : c.tn) += 1;
    }
  }
  if (c.total() == 0) throw EmptyDataset("evaluation needs at least one labeled row");
  return metrics_from_confusion(c);
}

std::string model_to_json(const TrainedModel& model) {
  const json params = params_json(model);
  json j;
  j["format_version"] = kModelFormatVersion;
  j["kind"] = std::string(to_string(model.kind));
  j["codec_fingerprint"] = to_hex(model.codec_fingerprint);
  j["created_at"] = model.trained_at;
  j["version"] = model.version;
  j["width"] = model.width;
  j["checksum"] = to_hex(fnv1a64(params.dump()));
  j["params"] = params;
  return j.dump();
}

TrainedModel model_from_json(std::string_view text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw CorruptModel(std::string("model document is not valid JSON: ") + e.what());
  }
  try {
    if (!j.is_object() || !j.contains("format_version")) throw CorruptModel("missing model header");
    const int format = j.at("format_version").get<int>();
    if (format != kModelFormatVersion) {
      throw VersionMismatch("model format version " + std::to_string(format) + " is not supported (expected " +
                            std::to_string(kModelFormatVersion) + ")");
    }
    const json& params = j.at("params");
    if (from_hex(j.at("checksum").get<std::string>()) != fnv1a64(params.dump())) {
      throw CorruptModel("model checksum mismatch");
    }
    TrainedModel m;
    m.kind = model_kind_from_string(j.at("kind").get<std::string>());
    m.codec_fingerprint = from_hex(j.at("codec_fingerprint").get<std::string>());
    m.trained_at = j.at("created_at").get<double>();
    m.version = j.at("version").get<std::int64_t>();
    m.width = j.at("width").get<Eigen::Index>();
    if (m.width < 1) throw CorruptModel("model width must be positive");
    m.params = json_params(m.kind, params, m.width);
    return m;
  } catch (const json::exception& e) {
    throw CorruptModel(std::string("malformed model document: ") + e.what());
  } catch (const ConfigError& e) {
    throw CorruptModel(e.what());
  }
}

void save_model(const TrainedModel& model, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  out << model_to_json(model) << '\n';
  if (!out) throw IoError("write failed for " + path.string());
}

TrainedModel load_model(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return model_from_json(ss.str());
}

}  // namespace maliot
