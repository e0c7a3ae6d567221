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

#include <filesystem>
#include <fstream>

#include "json.hpp"
#include "maliot/classifiers.hpp"

namespace maliot {
namespace {

namespace fs = std::filesystem;

FeatureMatrix blobs(std::uint64_t seed, int n, int d) {
  Rng rng(seed);
  FeatureMatrix m;
  m.values.resize(n, d);
  m.labels.resize(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    const int c = rng.bernoulli(0.35) ? 1 : 0;
    for (int j = 0; j < d; ++j) m.values(i, j) = rng.normal(c * (j % 3 == 0 ? 1.2 : 0.2), 1.0);
    m.labels[static_cast<std::size_t>(i)] = c;
  }
  m.codec_fingerprint = 0xfeedULL;
  return m;
}

TrainConfig quick_config() {
  TrainConfig cfg;
  cfg.forest.n_trees = 7;
  cfg.mlp.dense_units = 12;
  cfg.mlp.n_epoch = 2;
  cfg.linear.epochs = 2;
  return cfg;
}

class ModelRoundTrip : public ::testing::TestWithParam<ModelKind> {};

TEST_P(ModelRoundTrip, ScoresAreBitIdentical) {
  const auto data = blobs(3, 600, 6);
  TrainOptions opts;
  opts.version = 42;
  opts.trained_at = 1.7e9;
  const auto model = train(GetParam(), data, quick_config(), opts);
  const auto back = model_from_json(model_to_json(model));
  EXPECT_EQ(back.kind, model.kind);
  EXPECT_EQ(back.version, 42);
  EXPECT_EQ(back.trained_at, 1.7e9);
  EXPECT_EQ(back.width, 6);
  EXPECT_EQ(back.codec_fingerprint, 0xfeedULL);
  const auto probe = blobs(4, 300, 6);
  const auto a = predict_batch(model, probe);
  const auto b = predict_batch(back, probe);
  for (std::size_t i = 0; i < a.size(); ++i) {
    ASSERT_EQ(a[i].score, b[i].score) << "row " << i;
    ASSERT_EQ(a[i].label, b[i].label);
  }
  EXPECT_EQ(model_to_json(back), model_to_json(model));
}

INSTANTIATE_TEST_SUITE_P(AllKinds, ModelRoundTrip, ::testing::ValuesIn(kAllModelKinds),
                         [](const auto& info) { return std::string(to_string(info.param)); });

class ModelFile : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() / ("maliot_model_io_" + std::to_string(::getpid()));
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }
  fs::path dir_;
};

TEST_F(ModelFile, SaveLoad) {
  const auto model = train(ModelKind::decision_tree, blobs(5, 200, 4), {}, {});
  save_model(model, dir_ / "dt.json");
  EXPECT_EQ(model_to_json(load_model(dir_ / "dt.json")), model_to_json(model));
}

TEST_F(ModelFile, TruncatedFileIsCorrupt) {
  const auto model = train(ModelKind::random_forest, blobs(5, 200, 4), quick_config(), {});
  const std::string text = model_to_json(model);
  std::ofstream(dir_ / "rf.json") << text.substr(0, text.size() / 2);
  EXPECT_THROW(load_model(dir_ / "rf.json"), CorruptModel);
}

TEST_F(ModelFile, MissingFileIsIoError) { EXPECT_THROW(load_model(dir_ / "absent.json"), IoError); }

TEST(ModelJson, TamperedParamsFailChecksum) {
  const auto model = train(ModelKind::logistic_regression, blobs(6, 200, 4), quick_config(), {});
  auto j = nlohmann::json::parse(model_to_json(model));
  j["params"]["bias"] = j["params"]["bias"].get<double>() + 1.0;
  EXPECT_THROW(model_from_json(j.dump()), CorruptModel);
}

TEST(ModelJson, UnknownFormatVersion) {
  const auto model = train(ModelKind::gaussian_nb, blobs(6, 200, 4), {}, {});
  auto j = nlohmann::json::parse(model_to_json(model));
  j["format_version"] = 2;
  EXPECT_THROW(model_from_json(j.dump()), VersionMismatch);
}

TEST(ModelJson, StructurallyInvalidTreeIsCorrupt) {
  const auto model = train(ModelKind::decision_tree, blobs(7, 200, 4), {}, {});
  auto j = nlohmann::json::parse(model_to_json(model));
  // Point the root back at itself; recompute the checksum so only validation can catch it.
  auto& nodes = j["params"]["nodes"];
  ASSERT_GT(nodes["feature"].size(), 1u);
  nodes["left"][0] = 0;
  j["checksum"] = to_hex(fnv1a64(j["params"].dump()));
  EXPECT_THROW(model_from_json(j.dump()), CorruptModel);
}

TEST(ModelJson, GarbageIsCorrupt) {
  EXPECT_THROW(model_from_json(""), CorruptModel);
  EXPECT_THROW(model_from_json("[1,2,3]"), CorruptModel);
  EXPECT_THROW(model_from_json(R"({"format_version":1})"), CorruptModel);
}

}  // namespace
}  // namespace maliot
