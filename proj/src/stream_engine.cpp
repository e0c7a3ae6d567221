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


#include "maliot/stream_engine.hpp"

#include <algorithm>
#include <cmath>
#include <ctime>
#include <fstream>
#include <map>
#include <thread>

#include "json.hpp"

namespace maliot {
namespace fs = std::filesystem;

namespace {

std::string hour_bucket(double ts) {
  const double clamped = std::clamp(ts, 0.0, 253402300799.0);  // up to year 9999
  const auto secs = static_cast<std::time_t>(std::floor(clamped));
  std::tm tm{};
  ::gmtime_r(&secs, &tm);
  char buf[16];
  std::strftime(buf, sizeof(buf), "%Y%m%d%H", &tm);
  return buf;
}

void check_pair(const TrainedModel& model, const FeatureCodec& codec) {
  if (model.codec_fingerprint != codec.fingerprint) {
    throw CodecMismatch("model was trained with codec " + to_hex(model.codec_fingerprint) +
                        " but the paired codec is " + to_hex(codec.fingerprint));
  }
  if (model.width != codec.width()) {
    throw DimensionMismatch("model width " + std::to_string(model.width) + " does not match codec width " +
                            std::to_string(codec.width()));
  }
}

}  // namespace

double EngineCounters::mean_us_per_row() const {
  return verdicts + parse_errors > 0
             ? static_cast<double>(batch_time_us) / static_cast<double>(verdicts + parse_errors)
             : 0.0;
}

double EngineCounters::p95_us_per_row() const {
  if (per_row_us.empty()) return 0.0;
  std::vector<double> v = per_row_us;
  const auto k = static_cast<std::size_t>(std::ceil(0.95 * static_cast<double>(v.size()))) - 1;
  std::nth_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(k), v.end());
  return v[k];
}

std::string counters_summary(const EngineCounters& c) {
  nlohmann::json j{{"rows", c.rows},
                   {"verdicts", c.verdicts},
                   {"parse_errors", c.parse_errors},
                   {"batches", c.batches},
                   {"persisted", c.persisted},
                   {"mean_us_per_row", c.mean_us_per_row()},
                   {"p95_us_per_row", c.p95_us_per_row()}};
  return j.dump();
}

void EngineConfig::validate() const {
  if (batch_interval_ms < 1) throw ConfigError("batch interval must be at least 1 ms");
  if (max_batch_rows < 1) throw ConfigError("max batch rows must be at least 1");
  if (topic.empty() || group.empty()) throw ConfigError("topic and group must be non-empty");
  if (sink == SinkKind::jsonl_file && sink_path.empty()) throw ConfigError("jsonl sink needs a path");
  if (sink == SinkKind::tcp && sink_address.empty()) throw ConfigError("tcp sink needs an address");
}

LoadedModel load_model_bundle(const fs::path& model_path) {
  LoadedModel out;
  try {
    out.model = load_model(model_path);
    out.codec = load_codec(codec_path_for(model_path));
  } catch (const IoError& e) {
    throw ModelLoadError(e.what());
  }
  check_pair(out.model, out.codec);
  return out;
}

StreamEngine::StreamEngine(EngineConfig config, std::unique_ptr<BrokerClient> client,
                           std::unique_ptr<VerdictSink> sink)
    : StreamEngine(config, std::move(client), std::move(sink), load_model_bundle(config.model_path)) {}

StreamEngine::StreamEngine(EngineConfig config, std::unique_ptr<BrokerClient> client,
                           std::unique_ptr<VerdictSink> sink, LoadedModel model)
    : config_(std::move(config)), client_(std::move(client)), sink_(std::move(sink)) {
  config_.validate();
  check_pair(model.model, model.codec);
  if (model.codec.feature_set != config_.feature_set) {
    throw ConfigError("engine is configured for the " + std::string(to_string(config_.feature_set)) +
                      " feature set but the model uses " + std::string(to_string(model.codec.feature_set)));
  }
  active_ = std::make_shared<const LoadedModel>(std::move(model));
  if (!config_.persist_dir.empty()) {
    std::error_code ec;
    fs::create_directories(config_.persist_dir, ec);
    if (ec) throw IoError("cannot create " + config_.persist_dir.string() + ": " + ec.message());
  }
}

std::int64_t StreamEngine::model_version() const {
  std::lock_guard lock(swap_mutex_);
  return active_->model.version;
}

EngineCounters StreamEngine::counters() const {
  std::lock_guard lock(counters_mutex_);
  return counters_;
}

void StreamEngine::hot_swap_model(const fs::path& model_path) {
  TrainedModel model;
  try {
    model = load_model(model_path);
  } catch (const IoError& e) {
    throw ModelLoadError(e.what());
  }
  std::optional<FeatureCodec> codec;
  if (fs::exists(codec_path_for(model_path))) codec = load_codec(codec_path_for(model_path));
  hot_swap_model(std::move(model), std::move(codec));
}

void StreamEngine::hot_swap_model(TrainedModel model, std::optional<FeatureCodec> codec) {
  std::lock_guard lock(swap_mutex_);
  const std::int64_t current = std::max(active_->model.version, staged_ ? staged_->model.version : 0);
  if (model.version <= current) {
    throw VersionRegression("model version " + std::to_string(model.version) +
                            " is not newer than the serving version " + std::to_string(current));
  }
  FeatureCodec chosen = codec ? std::move(*codec) : active_->codec;
  check_pair(model, chosen);
  if (chosen.feature_set != config_.feature_set) {
    throw CodecMismatch("replacement model uses the " + std::string(to_string(chosen.feature_set)) +
                        " feature set");
  }
  staged_ = std::make_shared<const LoadedModel>(LoadedModel{std::move(model), std::move(chosen)});
}

void StreamEngine::apply_staged() {
  std::lock_guard lock(swap_mutex_);
  if (staged_) {
    active_ = std::move(staged_);
    staged_.reset();
  }
}

std::size_t StreamEngine::run_once() {
  apply_staged();
  std::shared_ptr<const LoadedModel> model;
  {
    std::lock_guard lock(swap_mutex_);
    model = active_;
  }

  std::vector<Message> messages;
  const auto deadline = std::chrono::steady_clock::now() + std::chrono::milliseconds(config_.batch_interval_ms);
  while (messages.size() < config_.max_batch_rows) {
    const auto remaining = std::chrono::duration_cast<std::chrono::milliseconds>(
        deadline - std::chrono::steady_clock::now());
    if (remaining.count() <= 0) break;
    auto got = client_->poll(config_.group, config_.topic, config_.max_batch_rows - messages.size(), remaining);
    std::move(got.begin(), got.end(), std::back_inserter(messages));
  }
  if (messages.empty()) return 0;

  const std::int64_t formed_us = now_us();
  std::vector<FlowRecord> records;
  std::vector<std::size_t> parsed_index;  // message index of each parsed record
  records.reserve(messages.size());
  std::uint64_t parse_errors = 0;
  for (std::size_t i = 0; i < messages.size(); ++i) {
    try {
      records.push_back(parse_record(messages[i].payload, SourceDialect::maliot_csv));
      parsed_index.push_back(i);
    } catch (const ParseError&) {
      ++parse_errors;
    }
  }
  std::vector<Verdict> verdicts;
  if (!records.empty()) {
    const FeatureMatrix xs = encode_batch(records, model->codec);
    const auto preds = predict_batch(model->model, xs);
    verdicts.reserve(records.size());
    for (std::size_t j = 0; j < records.size(); ++j) {
      const Message& m = messages[parsed_index[j]];
      verdicts.push_back({m.topic, m.partition, m.offset, records[j].device_id, records[j].ts, preds[j].label,
                          preds[j].score, model->model.kind, model->model.version, 0});
    }
  }
  const std::int64_t elapsed = std::max<std::int64_t>(1, now_us() - formed_us);
  for (auto& v : verdicts) v.latency_us = elapsed;

  sink_->emit(verdicts);
  sink_->flush();
  if (fault_hook_) fault_hook_(FaultPoint::after_emit);
  persist(messages, records, parsed_index);
  if (fault_hook_) fault_hook_(FaultPoint::after_persist);

  OffsetMap next;
  for (const auto& m : messages) next[m.partition] = std::max(next[m.partition], m.offset + 1);
  client_->commit(config_.group, config_.topic, next);

  std::lock_guard lock(counters_mutex_);
  counters_.rows += messages.size();
  counters_.verdicts += verdicts.size();
  counters_.parse_errors += parse_errors;
  counters_.batches += 1;
  counters_.persisted += config_.persist_dir.empty() ? 0 : records.size();
  counters_.batch_time_us += static_cast<std::uint64_t>(elapsed);
  counters_.per_row_us.push_back(static_cast<double>(elapsed) / static_cast<double>(messages.size()));
  return messages.size();
}

void StreamEngine::persist(std::span<const Message> messages, std::span<const FlowRecord> records,
                           std::span<const std::size_t> parsed_index) {
  if (config_.persist_dir.empty() || records.empty()) return;
  std::map<fs::path, std::string> chunks;
  for (std::size_t j = 0; j < records.size(); ++j) {
    const Message& m = messages[parsed_index[j]];
    const fs::path file = config_.persist_dir / (m.topic + "-p" + std::to_string(m.partition) + "-" +
                                                 hour_bucket(records[j].ts) + ".csv");
    auto& chunk = chunks[file];
    chunk += format_record(records[j]);
    chunk += '\n';
  }
  for (const auto& [file, chunk] : chunks) {
    const bool fresh = !fs::exists(file);
    std::ofstream out(file, std::ios::app | std::ios::binary);
    if (!out) throw IoError("cannot append to " + file.string());
    if (fresh) out << maliot_header() << '\n';
    out << chunk;
    out.flush();
    if (!out) throw IoError("write failed for " + file.string());
  }
}

void StreamEngine::run(std::stop_token stop) {
  while (!stop.stop_requested()) {
    try {
      run_once();
    } catch (const BrokerError& e) {
      // The topic may not exist until the first producer creates it.
      if (e.code() != BrokerErrc::unknown_topic) throw;
      std::this_thread::sleep_for(std::chrono::milliseconds(config_.batch_interval_ms));
    }
  }
}

std::vector<FlowRecord> read_persisted(const fs::path& persist_dir) {
  if (!fs::is_directory(persist_dir)) throw IoError("persist dir " + persist_dir.string() + " does not exist");
  std::vector<fs::path> files;
  for (const auto& entry : fs::directory_iterator(persist_dir)) {
    if (entry.is_regular_file() && entry.path().extension() == ".csv") files.push_back(entry.path());
  }
  std::sort(files.begin(), files.end());
  std::vector<FlowRecord> records;
  for (const auto& f : files) {
    Dataset d = read_dataset(f, SourceDialect::maliot_csv);
    for (auto& r : d.records) {
      if (r.label) records.push_back(std::move(r));
    }
  }
  return records;
}

RetrainResult retrain_from_persisted(const fs::path& persist_dir, ModelKind kind, FeatureSet fs,
                                     const TrainConfig& config, const TrainOptions& options) {
  const auto records = read_persisted(persist_dir);
  if (records.empty()) throw EmptyDataset("no labeled rows under " + persist_dir.string());
  RetrainResult out;
  out.codec = fit_codec(records, fs);
  out.model = train(kind, encode_batch(records, out.codec), config, options);
  out.rows = records.size();
  return out;
}

}  // namespace maliot
