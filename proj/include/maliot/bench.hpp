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

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "maliot/classifiers.hpp"
#include "maliot/featurizer.hpp"
#include "maliot/traffic_sim.hpp"

namespace maliot {

enum class Experiment { inference_time, accuracy, scalability };
std::string_view to_string(Experiment e);

class InsufficientData : public DataError {
 public:
  using DataError::DataError;
};

/// One report row. Fields that do not apply to an experiment stay empty and
/// are written as empty CSV cells / JSON null.
struct BenchRow {
  std::string model_kind;
  std::string feature_set;
  /// "infer" (pre-encoded input) or "featurize_infer" (raw records in).
  std::string measure;
  std::optional<int> n_devices;
  std::optional<std::size_t> batch_size;
  std::optional<int> repetitions;
  std::optional<double> mean_us_per_row;
  std::optional<double> p95_us_per_row;
  /// Standard deviation of the per-repetition means.
  std::optional<double> rep_stddev_us;
  std::optional<double> throughput_rows_per_s;
  std::optional<std::uint64_t> produced;
  std::optional<std::uint64_t> verdicts;
  std::optional<double> accuracy;
  std::optional<double> precision;
  std::optional<double> recall;
  std::optional<double> f1;
};

struct BenchReport {
  Experiment experiment = Experiment::inference_time;
  std::vector<BenchRow> rows;
  std::string platform;
  std::uint64_t seed = 0;
  double timestamp = 0.0;  // seconds since epoch
};

/// Host description: kernel, machine, logical CPUs, compiler.
std::string platform_description();

/// Fixed CSV column order, also the JSONL key set.
const std::vector<std::string>& report_columns();

struct TimingStats {
  double mean_us_per_row = 0;  // median over repetitions of total time / rows
  double p95_us_per_row = 0;   // median over repetitions of the chunk-level p95
  double rep_stddev_us = 0;
  std::vector<double> rep_means;
};

/// Times `body(begin, end)` over [0, rows) in chunks of `chunk` rows after one
/// untimed warm-up pass. Each chunk is timed as a unit and its per-row cost
/// is elapsed / chunk rows.
TimingStats time_per_row(std::size_t rows, std::size_t chunk, int repetitions,
                         const std::function<void(std::size_t, std::size_t)>& body);

struct BenchModel {
  TrainedModel model;
  FeatureCodec codec;
};

struct InferenceOptions {
  int repetitions = 5;
  std::vector<std::size_t> batch_sizes = {1, 1000};
  /// Rows per timed chunk on the single-row path.
  std::size_t single_row_chunk = 64;
  bool include_featurize = true;
};

/// Per-row latency of each model on `records` for every batch size, with and
/// without featurization. Batch size 1 uses the single-row predict path.
BenchReport bench_inference(std::span<const BenchModel> models, std::span<const FlowRecord> records,
                            const InferenceOptions& options, std::uint64_t seed = 0);

struct AccuracyOptions {
  std::vector<ModelKind> kinds{kAllModelKinds.begin(), kAllModelKinds.end()};
  std::vector<FeatureSet> feature_sets = {FeatureSet::full, FeatureSet::de_identified};
  SimConfig sim;
  double train_fraction = 0.8;
  TrainConfig train;
  std::uint64_t seed = 1;
};

/// Seeded shuffle then split; the codec is fitted on the training part only.
BenchReport bench_accuracy(const AccuracyOptions& options);
/// Same, on caller-supplied records.
BenchReport bench_accuracy(std::span<const FlowRecord> records, const AccuracyOptions& options);

struct ScalabilityOptions {
  std::vector<int> device_counts = {1, 2, 3, 4, 5, 6, 7, 8, 9};
  ModelKind kind = ModelKind::decision_tree;
  FeatureSet feature_set = FeatureSet::full;
  double rate_flows_per_s = 20.0;  // per device
  double duration_s = 3.0;
  int batch_interval_ms = 200;
  int partitions = 3;
  int repetitions = 1;
  std::uint64_t seed = 1;
  std::chrono::milliseconds drain_timeout{15000};
};

/// For each device count: in-memory broker behind a TCP server, an engine
/// consuming over TCP, and real-time replay of the simulated flows.
BenchReport bench_scalability(const ScalabilityOptions& options);

struct ReportPaths {
  std::filesystem::path jsonl;
  std::filesystem::path csv;
};

/// Appends rows to <out_dir>/<run_id>/report.jsonl and writes report.csv.
ReportPaths emit_report(const BenchReport& report, const std::filesystem::path& out_dir, const std::string& run_id);
std::string default_run_id(const BenchReport& report);

}  // namespace maliot
