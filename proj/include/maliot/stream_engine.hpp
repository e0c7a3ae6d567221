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

#include <atomic>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <memory>
#include <mutex>
#include <optional>
#include <span>
#include <stop_token>
#include <string>
#include <vector>

#include "maliot/broker.hpp"
#include "maliot/classifiers.hpp"
#include "maliot/featurizer.hpp"

namespace maliot {

/// One scored record. JSONL field names match the member names.
struct Verdict {
  std::string topic;
  int partition = 0;
  std::int64_t offset = 0;
  std::string device_id;
  double ts = 0.0;
  Label label = Label::benign;
  double score = 0.0;
  ModelKind model_kind = ModelKind::decision_tree;
  std::int64_t model_version = 0;
  /// Wall time of the whole micro-batch, from batch formation to emission.
  std::int64_t latency_us = 1;

  bool operator==(const Verdict&) const = default;
};

std::string verdict_to_json(const Verdict& v);
Verdict verdict_from_json(std::string_view line);

enum class SinkKind { jsonl_file, stdout_sink, tcp };
SinkKind sink_kind_from_string(std::string_view text);  // "jsonl_file" | "stdout" | "tcp"

class VerdictSink {
 public:
  virtual ~VerdictSink() = default;
  virtual void emit(std::span<const Verdict> verdicts) = 0;
  /// Returns once everything emitted so far is durable (or delivered).
  virtual void flush() = 0;
};

/// Appends one JSON object per line.
std::unique_ptr<VerdictSink> make_jsonl_sink(const std::filesystem::path& path);
std::unique_ptr<VerdictSink> make_stdout_sink();
/// Newline-delimited JSON over a plain TCP connection to host:port.
std::unique_ptr<VerdictSink> make_tcp_sink(const std::string& address);

/// Keeps verdicts in memory; for tests and benchmarks.
class MemorySink final : public VerdictSink {
 public:
  void emit(std::span<const Verdict> verdicts) override;
  void flush() override {}
  std::vector<Verdict> snapshot() const;
  std::size_t size() const;

 private:
  mutable std::mutex mutex_;
  std::vector<Verdict> verdicts_;
};

struct EngineConfig {
  int batch_interval_ms = 1000;
  std::size_t max_batch_rows = 10000;
  FeatureSet feature_set = FeatureSet::full;
  std::filesystem::path model_path;
  /// Raw rows are appended here; empty disables persistence.
  std::filesystem::path persist_dir;
  SinkKind sink = SinkKind::jsonl_file;
  std::filesystem::path sink_path = "verdicts.jsonl";
  std::string sink_address;
  std::string topic = "flows";
  std::string group = "maliot-engine";

  void validate() const;
};

std::unique_ptr<VerdictSink> make_sink(const EngineConfig& config);

struct EngineCounters {
  std::uint64_t rows = 0;  // messages consumed (verdicts + parse errors)
  std::uint64_t verdicts = 0;
  std::uint64_t parse_errors = 0;
  std::uint64_t batches = 0;
  std::uint64_t persisted = 0;
  /// Sum over batches of batch wall time; divided by verdicts gives the
  /// amortized per-row latency.
  std::uint64_t batch_time_us = 0;
  std::vector<double> per_row_us;  // one amortized value per non-empty batch

  double mean_us_per_row() const;
  double p95_us_per_row() const;
};

std::string counters_summary(const EngineCounters& c);

class VersionRegression : public DataError {
 public:
  using DataError::DataError;
};

class ModelLoadError : public DataError {
 public:
  using DataError::DataError;
};

/// Where a fault hook is invoked inside one micro-batch.
enum class FaultPoint { after_emit, after_persist };

/// Loads a model and its paired codec from `model_path` and `codec_path_for`.
struct LoadedModel {
  TrainedModel model;
  FeatureCodec codec;
};
LoadedModel load_model_bundle(const std::filesystem::path& model_path);

/// Micro-batch consumer: poll → parse → encode → predict → emit → persist →
/// commit. Offsets are committed only after the sink is flushed and rows are
/// persisted, so a crash anywhere before the commit redelivers the batch.
class StreamEngine {
 public:
  StreamEngine(EngineConfig config, std::unique_ptr<BrokerClient> client, std::unique_ptr<VerdictSink> sink);
  /// Variant with an already-loaded model (config.model_path is ignored).
  StreamEngine(EngineConfig config, std::unique_ptr<BrokerClient> client, std::unique_ptr<VerdictSink> sink,
               LoadedModel model);

  /// Runs one micro-batch: collects rows until max_batch_rows or
  /// batch_interval_ms elapses. Returns the number of messages consumed.
  std::size_t run_once();
  void run(std::stop_token stop);

  /// Validates and stages a model; it takes effect at the next batch
  /// boundary. Throws CodecMismatch or VersionRegression and keeps serving
  /// the current model on error.
  void hot_swap_model(const std::filesystem::path& model_path);
  void hot_swap_model(TrainedModel model, std::optional<FeatureCodec> codec = std::nullopt);

  std::int64_t model_version() const;
  EngineCounters counters() const;

  /// The hook may throw to simulate a crash at that point.
  void set_fault_hook(std::function<void(FaultPoint)> hook) { fault_hook_ = std::move(hook); }

 private:
  void apply_staged();
  void persist(std::span<const Message> messages, std::span<const FlowRecord> records,
               std::span<const std::size_t> parsed_index);

  EngineConfig config_;
  std::unique_ptr<BrokerClient> client_;
  std::unique_ptr<VerdictSink> sink_;
  std::shared_ptr<const LoadedModel> active_;
  mutable std::mutex swap_mutex_;
  std::shared_ptr<const LoadedModel> staged_;
  mutable std::mutex counters_mutex_;
  EngineCounters counters_;
  std::function<void(FaultPoint)> fault_hook_;
};

struct RetrainResult {
  TrainedModel model;
  FeatureCodec codec;
  std::size_t rows = 0;
};

/// Reads every *.csv under persist_dir in file-name order, keeps labeled rows,
/// fits a fresh codec and trains. Same result as train() on those rows.
RetrainResult retrain_from_persisted(const std::filesystem::path& persist_dir, ModelKind kind, FeatureSet fs,
                                     const TrainConfig& config, const TrainOptions& options);

/// Concatenated labeled rows of every persisted file, in the order retraining uses.
std::vector<FlowRecord> read_persisted(const std::filesystem::path& persist_dir);

}  // namespace maliot
