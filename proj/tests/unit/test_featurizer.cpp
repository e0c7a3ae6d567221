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
#include <filesystem>

#include "maliot/featurizer.hpp"

namespace maliot {
namespace {

std::vector<FlowRecord> small_corpus() {
  std::vector<FlowRecord> rs;
  for (int i = 0; i < 12; ++i) {
    FlowRecord r;
    r.ts = 1000 + i;
    r.src_ip = "10.0.0." + std::to_string(i % 4);
    r.src_port = static_cast<std::uint16_t>(30000 + 17 * i);
    r.dst_ip = i % 2 ? "93.184.216.34" : "192.168.0.1";
    r.dst_port = i % 2 ? 443 : 1883;
    r.proto = i % 3 ? Proto::tcp : Proto::udp;
    r.service = i % 2 ? Service::ssl : Service::none;
    if (i != 5) r.duration = 0.5 * i;
    r.orig_bytes = static_cast<std::uint64_t>(100 + 10 * i);
    r.resp_bytes = static_cast<std::uint64_t>(i * i);
    r.conn_state = i % 4 ? ConnState::SF : ConnState::S0;
    r.orig_pkts = static_cast<std::uint64_t>(1 + i);
    r.orig_ip_bytes = static_cast<std::uint64_t>(140 + 10 * i);
    r.resp_pkts = static_cast<std::uint64_t>(i / 2);
    r.resp_ip_bytes = static_cast<std::uint64_t>(3 * i);
    r.label = i % 3 == 0 ? Label::anomaly : Label::benign;
    r.device_id = "d" + std::to_string(i % 4);
    rs.push_back(r);
  }
  return rs;
}

TEST(Featurizer, Widths) {
  EXPECT_EQ(feature_width(FeatureSet::full), 40);
  EXPECT_EQ(feature_width(FeatureSet::de_identified), 34);
  const auto rs = small_corpus();
  EXPECT_EQ(fit_codec(rs, FeatureSet::full).width(), 40);
  EXPECT_EQ(fit_codec(rs, FeatureSet::de_identified).width(), 34);
}

TEST(Featurizer, DeidentifiedDropsAddressesAndPorts) {
  for (const auto& name : numeric_feature_names(FeatureSet::de_identified)) {
    EXPECT_EQ(name.find("ip_hash"), std::string::npos);
    EXPECT_EQ(name.find("port"), std::string::npos);
  }
  auto rs = small_corpus();
  const auto codec = fit_codec(rs, FeatureSet::de_identified);
  FlowRecord a = rs[3];
  FlowRecord b = a;
  b.src_ip = "172.16.9.9";
  b.dst_ip = "1.1.1.1";
  b.src_port = 1;
  b.dst_port = 2;
  EXPECT_EQ(encode(a, codec).values, encode(b, codec).values);
}

TEST(Featurizer, TrainingColumnsAreStandardized) {
  const auto rs = small_corpus();
  const auto codec = fit_codec(rs, FeatureSet::full);
  const auto m = encode_batch(rs, codec);
  const auto& names = codec.numeric_names;
  for (Eigen::Index j = 0; j < codec.numeric_width(); ++j) {
    const std::string& name = names[static_cast<std::size_t>(j)];
    // Missing durations encode to 0 and shrink the variance; constant columns encode to 0.
    if (name == "duration" || m.values.col(j).isZero(0.0)) continue;
    const double mean = m.values.col(j).mean();
    const double var = (m.values.col(j).array() - mean).square().mean();
    EXPECT_NEAR(mean, 0.0, 1e-12) << name;
    EXPECT_NEAR(var, 1.0, 1e-9) << name;
  }
}

TEST(Featurizer, MissingValueEncodesAsZero) {
  const auto rs = small_corpus();
  const auto codec = fit_codec(rs, FeatureSet::de_identified);
  const auto v = encode(rs[5], codec);
  EXPECT_EQ(v.values[0], 0.0);  // duration comes first in the de-identified layout
  double sum = 0, n = 0;
  for (const auto& r : rs) {
    if (r.duration) {
      sum += *r.duration;
      ++n;
    }
  }
  EXPECT_NEAR(codec.means[0], sum / n, 1e-12);
}

TEST(Featurizer, OneHotBlocksSumToOne) {
  const auto rs = small_corpus();
  const auto codec = fit_codec(rs, FeatureSet::full);
  for (const auto& r : rs) {
    const auto v = encode(r, codec);
    const auto k = codec.numeric_width();
    const auto p = static_cast<Eigen::Index>(kProtoCount);
    const auto s = static_cast<Eigen::Index>(kServiceCount);
    const auto c = static_cast<Eigen::Index>(kConnStateCount);
    EXPECT_EQ(v.values.segment(k, p).sum(), 1.0);
    EXPECT_EQ(v.values.segment(k + p, s).sum(), 1.0);
    EXPECT_EQ(v.values.segment(k + p + s, c).sum(), 1.0);
    EXPECT_EQ(v.values[k + static_cast<Eigen::Index>(r.proto)], 1.0);
  }
}

TEST(Featurizer, ConstantColumnGetsUnitScale) {
  auto rs = small_corpus();
  for (auto& r : rs) r.missed_bytes = 7;
  const auto codec = fit_codec(rs, FeatureSet::full);
  const auto it = std::find(codec.numeric_names.begin(), codec.numeric_names.end(), "missed_bytes");
  const auto j = static_cast<Eigen::Index>(it - codec.numeric_names.begin());
  EXPECT_EQ(codec.stddevs[j], 1.0);
  EXPECT_EQ(encode(rs[0], codec).values[j], 0.0);
}

TEST(Featurizer, LabelsAndFingerprintCarryThrough) {
  auto rs = small_corpus();
  rs[1].label.reset();
  const auto codec = fit_codec(rs, FeatureSet::full);
  const auto m = encode_batch(rs, codec);
  EXPECT_EQ(m.labels[0], 1);
  EXPECT_EQ(m.labels[1], kUnlabeled);
  EXPECT_EQ(m.labels[2], 0);
  EXPECT_EQ(m.codec_fingerprint, codec.fingerprint);
  EXPECT_EQ(encode(rs[0], codec).codec_fingerprint, codec.fingerprint);
}

TEST(Featurizer, BatchMatchesSingle) {
  const auto rs = small_corpus();
  const auto codec = fit_codec(rs, FeatureSet::full);
  const auto m = encode_batch(rs, codec);
  for (std::size_t i = 0; i < rs.size(); ++i) {
    const Eigen::VectorXd row = m.values.row(static_cast<Eigen::Index>(i)).transpose();
    EXPECT_EQ(row, encode(rs[i], codec).values);
  }
}

TEST(Featurizer, FingerprintDependsOnStatistics) {
  auto rs = small_corpus();
  const auto a = fit_codec(rs, FeatureSet::full);
  EXPECT_EQ(a.fingerprint, fit_codec(rs, FeatureSet::full).fingerprint);
  rs[0].orig_pkts += 1;
  EXPECT_NE(a.fingerprint, fit_codec(rs, FeatureSet::full).fingerprint);
  EXPECT_NE(a.fingerprint, fit_codec(small_corpus(), FeatureSet::de_identified).fingerprint);
}

TEST(Featurizer, CodecJsonRoundTrip) {
  const auto codec = fit_codec(small_corpus(), FeatureSet::de_identified);
  const auto back = codec_from_json(codec_to_json(codec));
  EXPECT_EQ(back.fingerprint, codec.fingerprint);
  EXPECT_EQ(back.means, codec.means);
  EXPECT_EQ(back.stddevs, codec.stddevs);
  EXPECT_EQ(back.feature_set, FeatureSet::de_identified);

  const auto path = std::filesystem::temp_directory_path() / "maliot_codec_test.codec.json";
  save_codec(codec, path);
  EXPECT_EQ(load_codec(path).fingerprint, codec.fingerprint);
  std::filesystem::remove(path);
}

TEST(Featurizer, TamperedCodecIsRejected) {
  std::string text = codec_to_json(fit_codec(small_corpus(), FeatureSet::full));
  const auto pos = text.find("\"means\"");
  ASSERT_NE(pos, std::string::npos);
  const auto digit = text.find_first_of("123456789", pos);
  text[digit] = text[digit] == '9' ? '8' : static_cast<char>(text[digit] + 1);
  EXPECT_THROW(codec_from_json(text), DataError);
  EXPECT_THROW(codec_from_json("{not json"), DataError);
}

TEST(Featurizer, CodecPathSitsBesideModel) {
  EXPECT_EQ(codec_path_for("/m/rf.json"), std::filesystem::path("/m/rf.codec.json"));
}

TEST(Featurizer, TooFewRecordsToFit) {
  const auto rs = small_corpus();
  EXPECT_THROW(fit_codec(std::span(rs).first(1), FeatureSet::full), EmptyDataset);
}

TEST(Featurizer, IpHelpers) {
  EXPECT_TRUE(is_private_ip("10.1.2.3"));
  EXPECT_TRUE(is_private_ip("172.16.0.1"));
  EXPECT_TRUE(is_private_ip("172.31.255.255"));
  EXPECT_FALSE(is_private_ip("172.32.0.1"));
  EXPECT_TRUE(is_private_ip("192.168.100.1"));
  EXPECT_FALSE(is_private_ip("8.8.8.8"));
  EXPECT_FALSE(is_private_ip("not-an-ip"));
  EXPECT_TRUE(is_private_ip("fd00::1"));
  const double h = ip_hash_unit("192.168.1.1");
  EXPECT_GE(h, 0.0);
  EXPECT_LE(h, 1.0);
  EXPECT_EQ(h, ip_hash_unit("192.168.1.1"));
  EXPECT_NE(h, ip_hash_unit("192.168.1.2"));
}

TEST(Featurizer, FeatureSetNames) {
  EXPECT_EQ(feature_set_from_string("deid"), FeatureSet::de_identified);
  EXPECT_EQ(feature_set_from_string("full"), FeatureSet::full);
  EXPECT_THROW(feature_set_from_string("partial"), ConfigError);
}

}  // namespace
}  // namespace maliot
