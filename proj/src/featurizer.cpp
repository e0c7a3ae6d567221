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


#include "maliot/featurizer.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include "json.hpp"

namespace maliot {
namespace {

using json = nlohmann::json;

constexpr int kCodecVersion = 1;

const std::vector<std::string> kFullNumerics = {
    "src_ip_hash", "src_ip_private", "src_port", "dst_ip_hash", "dst_ip_private", "dst_port",
    "duration", "orig_bytes", "resp_bytes", "missed_bytes", "orig_pkts", "orig_ip_bytes",
    "resp_pkts", "resp_ip_bytes"};
const std::vector<std::string> kDeidNumerics = {
    "duration", "orig_bytes", "resp_bytes", "missed_bytes", "orig_pkts", "orig_ip_bytes",
    "resp_pkts", "resp_ip_bytes"};

constexpr std::size_t kMaxNumerics = 14;

// Raw numeric values in encoding order; `present` is false for missing values.
std::size_t raw_numerics(const FlowRecord& r, FeatureSet fs, double* x, bool* present) noexcept {
  std::size_t n = 0;
  auto put = [&](double v) {
    x[n] = v;
    present[n] = true;
    ++n;
  };
  auto put_opt = [&](const auto& v) {
    x[n] = v ? static_cast<double>(*v) : 0.0;
    present[n] = v.has_value();
    ++n;
  };
  if (fs == FeatureSet::full) {
    put(ip_hash_unit(r.src_ip));
    put(is_private_ip(r.src_ip) ? 1.0 : 0.0);
    put(r.src_port);
    put(ip_hash_unit(r.dst_ip));
    put(is_private_ip(r.dst_ip) ? 1.0 : 0.0);
    put(r.dst_port);
  }
  put_opt(r.duration);
  put_opt(r.orig_bytes);
  put_opt(r.resp_bytes);
  put(static_cast<double>(r.missed_bytes));
  put(static_cast<double>(r.orig_pkts));
  put(static_cast<double>(r.orig_ip_bytes));
  put(static_cast<double>(r.resp_pkts));
  put(static_cast<double>(r.resp_ip_bytes));
  return n;
}

json codec_body(const FeatureCodec& c) {
  json j;
  j["format"] = "maliot-codec";
  j["version"] = kCodecVersion;
  j["feature_set"] = std::string(to_string(c.feature_set));
  j["numeric_features"] = c.numeric_names;
  j["vocab_proto"] = vocab_proto();
  j["vocab_service"] = vocab_service();
  j["vocab_conn_state"] = vocab_conn_state();
  j["means"] = std::vector<double>(c.means.data(), c.means.data() + c.means.size());
  j["stddevs"] = std::vector<double>(c.stddevs.data(), c.stddevs.data() + c.stddevs.size());
  j["width"] = c.width();
  return j;
}

std::uint64_t fingerprint_of(const FeatureCodec& c) { return fnv1a64(codec_body(c).dump()); }

}  // namespace

std::string_view to_string(FeatureSet fs) {
  return fs == FeatureSet::full ? "full" : "de_identified";
}

FeatureSet feature_set_from_string(std::string_view text) {
  if (text == "full") return FeatureSet::full;
  if (text == "deid" || text == "de_identified" || text == "de-identified") {
    return FeatureSet::de_identified;
  }
  throw ConfigError("unknown feature set '" + std::string(text) + "' (expected full|deid)");
}

const std::vector<std::string>& numeric_feature_names(FeatureSet fs) {
  return fs == FeatureSet::full ? kFullNumerics : kDeidNumerics;
}

Eigen::Index feature_width(FeatureSet fs) {
  return static_cast<Eigen::Index>(numeric_feature_names(fs).size() + kProtoCount + kServiceCount +
                                   kConnStateCount);
}

const std::vector<std::string>& vocab_proto() {
  static const std::vector<std::string> v = [] {
    std::vector<std::string> out;
    for (std::size_t i = 0; i < kProtoCount; ++i) out.emplace_back(to_string(static_cast<Proto>(i)));
    return out;
  }();
  return v;
}

const std::vector<std::string>& vocab_service() {
  static const std::vector<std::string> v = [] {
    std::vector<std::string> out;
    for (std::size_t i = 0; i < kServiceCount; ++i) out.emplace_back(to_string(static_cast<Service>(i)));
    return out;
  }();
  return v;
}

const std::vector<std::string>& vocab_conn_state() {
  static const std::vector<std::string> v = [] {
    std::vector<std::string> out;
    for (std::size_t i = 0; i < kConnStateCount; ++i) {
      out.emplace_back(to_string(static_cast<ConnState>(i)));
    }
    return out;
  }();
  return v;
}

double ip_hash_unit(std::string_view ip) noexcept {
  return static_cast<double>(fnv1a32(ip)) / 4294967295.0;
}

bool is_private_ip(std::string_view ip) noexcept {
  if (ip.find(':') != std::string_view::npos) {
    return ip.size() >= 2 && (ip[0] == 'f' || ip[0] == 'F') &&
           (ip[1] == 'c' || ip[1] == 'd' || ip[1] == 'C' || ip[1] == 'D');
  }
  unsigned octets[4] = {0, 0, 0, 0};
  const char* p = ip.data();
  const char* end = ip.data() + ip.size();
  for (int i = 0; i < 4; ++i) {
    auto [next, ec] = std::from_chars(p, end, octets[i]);
    if (ec != std::errc{} || octets[i] > 255) return false;
    p = next;
    if (i < 3) {
      if (p == end || *p != '.') return false;
      ++p;
    }
  }
  if (p != end) return false;
  return octets[0] == 10 || (octets[0] == 172 && octets[1] >= 16 && octets[1] <= 31) ||
         (octets[0] == 192 && octets[1] == 168);
}

FeatureCodec fit_codec(std::span<const FlowRecord> records, FeatureSet fs) {
  if (records.size() < 2) throw EmptyDataset("fitting a codec needs at least 2 records");
  const auto& names = numeric_feature_names(fs);
  const std::size_t k = names.size();

  std::vector<double> sum(k, 0.0);
  std::vector<std::size_t> count(k, 0);
  double x[kMaxNumerics];
  bool present[kMaxNumerics];
  for (const auto& r : records) {
    raw_numerics(r, fs, x, present);
    for (std::size_t i = 0; i < k; ++i) {
      if (present[i]) {
        sum[i] += x[i];
        ++count[i];
      }
    }
  }
  FeatureCodec codec;
  codec.feature_set = fs;
  codec.numeric_names = names;
  codec.means = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(k));
  codec.stddevs = Eigen::VectorXd::Ones(static_cast<Eigen::Index>(k));
  for (std::size_t i = 0; i < k; ++i) {
    if (count[i] > 0) codec.means[static_cast<Eigen::Index>(i)] = sum[i] / static_cast<double>(count[i]);
  }
  std::vector<double> sq(k, 0.0);
  for (const auto& r : records) {
    raw_numerics(r, fs, x, present);
    for (std::size_t i = 0; i < k; ++i) {
      if (present[i]) {
        const double d = x[i] - codec.means[static_cast<Eigen::Index>(i)];
        sq[i] += d * d;
      }
    }
  }
  for (std::size_t i = 0; i < k; ++i) {
    const auto ii = static_cast<Eigen::Index>(i);
    if (count[i] == 0) continue;
    const double sd = std::sqrt(sq[i] / static_cast<double>(count[i]));
    // Zero-variance guard; the two-pass sum can leave rounding residue.
    const double tiny = 1e-12 * std::max(1.0, std::abs(codec.means[ii]));
    codec.stddevs[ii] = (sd > tiny && std::isfinite(sd)) ? sd : 1.0;
  }
  codec.fingerprint = fingerprint_of(codec);
  return codec;
}

void encode_into(const FlowRecord& r, const FeatureCodec& codec, double* out) noexcept {
  double x[kMaxNumerics];
  bool present[kMaxNumerics];
  const std::size_t k = raw_numerics(r, codec.feature_set, x, present);
  for (std::size_t i = 0; i < k; ++i) {
    const auto ii = static_cast<Eigen::Index>(i);
    out[i] = present[i] ? (x[i] - codec.means[ii]) / codec.stddevs[ii] : 0.0;
  }
  double* onehot = out + k;
  std::fill(onehot, onehot + kProtoCount + kServiceCount + kConnStateCount, 0.0);
  onehot[static_cast<std::size_t>(r.proto)] = 1.0;
  onehot[kProtoCount + static_cast<std::size_t>(r.service)] = 1.0;
  onehot[kProtoCount + kServiceCount + static_cast<std::size_t>(r.conn_state)] = 1.0;
}

FeatureVector encode(const FlowRecord& record, const FeatureCodec& codec) {
  FeatureVector v;
  v.values.resize(codec.width());
  encode_into(record, codec, v.values.data());
  v.label = record.label ? static_cast<int>(*record.label) : kUnlabeled;
  v.codec_fingerprint = codec.fingerprint;
  return v;
}

FeatureMatrix encode_batch(std::span<const FlowRecord> records, const FeatureCodec& codec) {
  FeatureMatrix m;
  const auto n = static_cast<Eigen::Index>(records.size());
  m.values.resize(n, codec.width());
  m.labels.resize(records.size());
  m.codec_fingerprint = codec.fingerprint;
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto& r = records[static_cast<std::size_t>(i)];
    encode_into(r, codec, m.values.row(i).data());
    m.labels[static_cast<std::size_t>(i)] = r.label ? static_cast<int>(*r.label) : kUnlabeled;
  }
  return m;
}

std::string codec_to_json(const FeatureCodec& codec) {
  json j = codec_body(codec);
  j["fingerprint"] = to_hex(codec.fingerprint);
  return j.dump(2);
}

FeatureCodec codec_from_json(std::string_view text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw DataError(std::string("corrupt codec document: ") + e.what());
  }
  try {
    if (j.at("format") != "maliot-codec") throw DataError("not a codec document");
    if (j.at("version").get<int>() != kCodecVersion) {
      throw DataError("unsupported codec version " + j.at("version").dump());
    }
    FeatureCodec c;
    c.feature_set = feature_set_from_string(j.at("feature_set").get<std::string>());
    c.numeric_names = j.at("numeric_features").get<std::vector<std::string>>();
    if (c.numeric_names != numeric_feature_names(c.feature_set) ||
        j.at("vocab_proto").get<std::vector<std::string>>() != vocab_proto() ||
        j.at("vocab_service").get<std::vector<std::string>>() != vocab_service() ||
        j.at("vocab_conn_state").get<std::vector<std::string>>() != vocab_conn_state()) {
      throw DataError("codec feature layout does not match this build");
    }
    const auto means = j.at("means").get<std::vector<double>>();
    const auto sds = j.at("stddevs").get<std::vector<double>>();
    if (means.size() != c.numeric_names.size() || sds.size() != means.size()) {
      throw DataError("codec statistics have the wrong length");
    }
    c.means = Eigen::Map<const Eigen::VectorXd>(means.data(), static_cast<Eigen::Index>(means.size()));
    c.stddevs = Eigen::Map<const Eigen::VectorXd>(sds.data(), static_cast<Eigen::Index>(sds.size()));
    c.fingerprint = fingerprint_of(c);
    if (j.contains("fingerprint") && from_hex(j.at("fingerprint").get<std::string>()) != c.fingerprint) {
      throw DataError("codec fingerprint does not match its contents");
    }
    return c;
  } catch (const json::exception& e) {
    throw DataError(std::string("corrupt codec document: ") + e.what());
  }
}

void save_codec(const FeatureCodec& codec, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  out << codec_to_json(codec) << '\n';
  if (!out) throw IoError("write failed for " + path.string());
}

FeatureCodec load_codec(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return codec_from_json(ss.str());
}

std::filesystem::path codec_path_for(const std::filesystem::path& model_path) {
  auto p = model_path;
  p.replace_extension(".codec.json");
  return p;
}

FeatureMatrix take_rows(const FeatureMatrix& m, std::span<const Eigen::Index> rows) {
  FeatureMatrix out;
  out.codec_fingerprint = m.codec_fingerprint;
  out.values.resize(static_cast<Eigen::Index>(rows.size()), m.cols());
  out.labels.resize(rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    out.values.row(static_cast<Eigen::Index>(i)) = m.values.row(rows[i]);
    out.labels[i] = m.labels[static_cast<std::size_t>(rows[i])];
  }
  return out;
}

}  // namespace maliot
