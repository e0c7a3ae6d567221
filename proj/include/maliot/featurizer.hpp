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
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "maliot/flow_schema.hpp"

namespace maliot {

enum class FeatureSet { full, de_identified };

std::string_view to_string(FeatureSet fs);
FeatureSet feature_set_from_string(std::string_view text);  // "full" | "deid" | "de_identified"

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

inline constexpr int kUnlabeled = -1;

/// Fitted encoding of FlowRecords into fixed-width vectors: z-scored numerics
/// first, then one-hot blocks for proto, service and conn_state.
struct FeatureCodec {
  FeatureSet feature_set = FeatureSet::full;
  std::vector<std::string> numeric_names;
  Eigen::VectorXd means;
  Eigen::VectorXd stddevs;
  std::uint64_t fingerprint = 0;

  Eigen::Index numeric_width() const { return means.size(); }
  Eigen::Index width() const {
    return numeric_width() + static_cast<Eigen::Index>(kProtoCount + kServiceCount + kConnStateCount);
  }
};

struct FeatureVector {
  Eigen::VectorXd values;
  int label = kUnlabeled;  // benign = 0, anomaly = 1
  std::uint64_t codec_fingerprint = 0;
};

struct FeatureMatrix {
  RowMatrix values;
  std::vector<int> labels;
  std::uint64_t codec_fingerprint = 0;

  Eigen::Index rows() const { return values.rows(); }
  Eigen::Index cols() const { return values.cols(); }
};

/// Names of the numeric features of a feature set, in encoding order.
const std::vector<std::string>& numeric_feature_names(FeatureSet fs);

/// Encoded width for a feature set; constant across fits.
Eigen::Index feature_width(FeatureSet fs);

/// Fixed category vocabularies; each ends in `other`.
const std::vector<std::string>& vocab_proto();
const std::vector<std::string>& vocab_service();
const std::vector<std::string>& vocab_conn_state();

/// Stable hash of an address scaled to [0, 1].
double ip_hash_unit(std::string_view ip) noexcept;
/// RFC 1918 IPv4 ranges and IPv6 unique-local fc00::/7.
bool is_private_ip(std::string_view ip) noexcept;

FeatureCodec fit_codec(std::span<const FlowRecord> records, FeatureSet fs);

FeatureVector encode(const FlowRecord& record, const FeatureCodec& codec);

/// Writes the encoding of `record` into `out` (length codec.width()).
void encode_into(const FlowRecord& record, const FeatureCodec& codec, double* out) noexcept;

FeatureMatrix encode_batch(std::span<const FlowRecord> records, const FeatureCodec& codec);

std::string codec_to_json(const FeatureCodec& codec);
FeatureCodec codec_from_json(std::string_view text);
void save_codec(const FeatureCodec& codec, const std::filesystem::path& path);
FeatureCodec load_codec(const std::filesystem::path& path);

/// Codec file stored next to a model file: "model.json" -> "model.codec.json".
std::filesystem::path codec_path_for(const std::filesystem::path& model_path);

/// Row-subset helper used by train/test splits.
FeatureMatrix take_rows(const FeatureMatrix& m, std::span<const Eigen::Index> rows);

}  // namespace maliot
