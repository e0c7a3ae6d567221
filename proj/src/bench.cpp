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


#include "maliot/bench.hpp"

#include <sys/utsname.h>

#include <algorithm>
#include <cmath>
#include <ctime>
#include <fstream>
#include <numeric>
#include <thread>

#include "json.hpp"
#include "maliot/stream_engine.hpp"
#include "maliot/wire.hpp"

namespace maliot {
namespace {

using json = nlohmann::json;
using Clock = std::chrono::steady_clock;

double median(std::vector<double> v) {
  if (v.empty()) return 0.0;
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

double percentile(std::vector<double> v, double q) {
  if (v.empty()) return 0.0;
  std::sort(v.begin(), v.end());
  const auto k = static_cast<std::size_t>(std::ceil(q * static_cast<double>(v.size()))) - 1;
  return v[std::min(k, v.size() - 1)];
}

double stddev(const std::vector<double>& v) {
  if (v.size() < 2) return 0.0;
  const double mean = std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
  double ss = 0.0;
  for (double x : v) ss += (x - mean) * (x - mean);
  return std::sqrt(ss / static_cast<double>(v.size() - 1));
}

// Keeps results observable so the optimizer cannot drop the timed work.
volatile double g_sink = 0.0;

std::string utc_stamp(double seconds) {
  const auto t = static_cast<std::time_t>(seconds);
  std::tm tm{};
  ::gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof(buf), "%Y%m%dT%H%M%SZ", &tm);
  return buf;
}

template <class T>
json opt_json(const std::optional<T>& v) {
  return v ? json(*v) : json(nullptr);
}

template <class T>
std::string opt_csv(const std::optional<T>& v) {
  if (!v) return {};
  if constexpr (std::is_floating_point_v<T>) {
    return format_double(*v);
  } else {
    return std::to_string(*v);
  }
}

std::vector<std::string> row_cells(Experiment e, const BenchRow& r) {
  return {std::string(to_string(e)), r.model_kind,          r.feature_set,       r.measure,
          opt_csv(r.n_devices),      opt_csv(r.batch_size), opt_csv(r.repetitions), opt_csv(r.mean_us_per_row),
          opt_csv(r.p95_us_per_row), opt_csv(r.rep_stddev_us), opt_csv(r.throughput_rows_per_s),
          opt_csv(r.produced),       opt_csv(r.verdicts),   opt_csv(r.accuracy), opt_csv(r.precision),
          opt_csv(r.recall),         opt_csv(r.f1)};
}

json row_json(const BenchReport& report, const BenchRow& r, const std::string& run_id) {
  return json{{"run_id", run_id},
              {"experiment", to_string(report.experiment)},
              {"platform", report.platform},
              {"seed", report.seed},
              {"timestamp", report.timestamp},
              {"model_kind", r.model_kind},
              {"feature_set", r.feature_set},
              {"measure", r.measure},
              {"n_devices", opt_json(r.n_devices)},
              {"batch_size", opt_json(r.batch_size)},
              {"repetitions", opt_json(r.repetitions)},
              {"mean_us_per_row", opt_json(r.mean_us_per_row)},
              {"p95_us_per_row", opt_json(r.p95_us_per_row)},
              {"rep_stddev_us", opt_json(r.rep_stddev_us)},
              {"throughput_rows_per_s", opt_json(r.throughput_rows_per_s)},
              {"produced", opt_json(r.produced)},
              {"verdicts", opt_json(r.verdicts)},
              {"accuracy", opt_json(r.accuracy)},
              {"precision", opt_json(r.precision)},
              {"recall", opt_json(r.recall)},
              {"f1", opt_json(r.f1)}};
}

BenchReport new_report(Experiment e, std::uint64_t seed) {
  BenchReport r;
  r.experiment = e;
  r.platform = platform_description();
  r.seed = seed;
  r.timestamp = wall_clock_seconds();
  return r;
}

}  // namespace

std::string_view to_string(Experiment e) {
  switch (e) {
    case Experiment::inference_time: return "inference_time";
    case Experiment::accuracy: return "accuracy";
    case Experiment::scalability: return "scalability";
  }
  return "?";
}

std::string platform_description() {
  utsname u{};
  std::string os = "unknown";
  if (::uname(&u) == 0) os = std::string(u.sysname) + " " + u.release + " " + u.machine;
  return os + "; cpus=" + std::to_string(std::thread::hardware_concurrency()) + "; compiler=" +
#if defined(__clang__)
         "clang " __clang_version__;
#elif defined(__GNUC__)
         "gcc " __VERSION__;
#else
         "unknown";
#endif
}

const std::vector<std::string>& report_columns() {
  static const std::vector<std::string> cols = {
      "experiment", "model_kind", "feature_set", "measure", "n_devices", "batch_size",
      "repetitions", "mean_us_per_row", "p95_us_per_row", "rep_stddev_us", "throughput_rows_per_s",
      "produced", "verdicts", "accuracy", "precision", "recall", "f1"};
  return cols;
}

TimingStats time_per_row(std::size_t rows, std::size_t chunk, int repetitions,
                         const std::function<void(std::size_t, std::size_t)>& body) {
  if (rows == 0 || chunk == 0) throw InsufficientData("nothing to time");
  if (repetitions < 1) throw ConfigError("repetitions must be at least 1");
  for (std::size_t b = 0; b < rows; b += chunk) body(b, std::min(rows, b + chunk));

  TimingStats stats;
  std::vector<double> p95s;
  for (int rep = 0; rep < repetitions; ++rep) {
    std::vector<double> chunk_costs;
    chunk_costs.reserve(rows / chunk + 1);
    double total_us = 0.0;
    for (std::size_t b = 0; b < rows; b += chunk) {
      const std::size_t e = std::min(rows, b + chunk);
      const auto t0 = Clock::now();
      body(b, e);
      const auto t1 = Clock::now();
      const double us = std::max(1e-3, std::chrono::duration<double, std::micro>(t1 - t0).count());
      total_us += us;
      chunk_costs.push_back(us / static_cast<double>(e - b));
    }
    stats.rep_means.push_back(total_us / static_cast<double>(rows));
    p95s.push_back(percentile(std::move(chunk_costs), 0.95));
  }
  stats.mean_us_per_row = median(stats.rep_means);
  stats.p95_us_per_row = median(p95s);
  stats.rep_stddev_us = stddev(stats.rep_means);
  return stats;
}

BenchReport bench_inference(std::span<const BenchModel> models, std::span<const FlowRecord> records,
                            const InferenceOptions& options, std::uint64_t seed) {
  if (records.size() < 1000) {
    throw InsufficientData("inference benchmark needs at least 1000 rows, got " + std::to_string(records.size()));
  }
  if (options.repetitions < 5) throw ConfigError("inference benchmark needs at least 5 repetitions");
  BenchReport report = new_report(Experiment::inference_time, seed);
  const std::size_t n = records.size();

  for (const auto& bm : models) {
    const FeatureMatrix all = encode_batch(records, bm.codec);
    std::vector<FeatureVector> vectors;
    vectors.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
      vectors.push_back({all.values.row(static_cast<Eigen::Index>(i)).transpose(), all.labels[i], all.codec_fingerprint});
    }

    for (std::size_t batch : options.batch_sizes) {
      if (batch < 1) throw ConfigError("batch size must be at least 1");
      std::vector<FeatureMatrix> chunks;
      if (batch > 1) {
        for (std::size_t b = 0; b < n; b += batch) {
          std::vector<Eigen::Index> idx(std::min(n, b + batch) - b);
          std::iota(idx.begin(), idx.end(), static_cast<Eigen::Index>(b));
          chunks.push_back(take_rows(all, idx));
        }
      }
      const std::size_t chunk = batch == 1 ? options.single_row_chunk : batch;

      auto add_row = [&](const std::string& measure, const TimingStats& s) {
        BenchRow row;
        row.model_kind = std::string(to_string(bm.model.kind));
        row.feature_set = std::string(to_string(bm.codec.feature_set));
        row.measure = measure;
        row.batch_size = batch;
        row.repetitions = options.repetitions;
        row.mean_us_per_row = s.mean_us_per_row;
        row.p95_us_per_row = s.p95_us_per_row;
        row.rep_stddev_us = s.rep_stddev_us;
        report.rows.push_back(std::move(row));
      };

      const TimingStats infer = time_per_row(n, chunk, options.repetitions, [&](std::size_t b, std::size_t e) {
        double acc = 0.0;
        if (batch == 1) {
          for (std::size_t i = b; i < e; ++i) acc += predict(bm.model, vectors[i]).score;
        } else {
          for (const auto& p : predict_batch(bm.model, chunks[b / batch])) acc += p.score;
        }
        g_sink = g_sink + acc;
      });
      add_row("infer", infer);

      if (options.include_featurize) {
        const TimingStats full = time_per_row(n, chunk, options.repetitions, [&](std::size_t b, std::size_t e) {
          double acc = 0.0;
          if (batch == 1) {
            for (std::size_t i = b; i < e; ++i) acc += predict(bm.model, encode(records[i], bm.codec)).score;
          } else {
            const FeatureMatrix xs = encode_batch(records.subspan(b, e - b), bm.codec);
            for (const auto& p : predict_batch(bm.model, xs)) acc += p.score;
          }
          g_sink = g_sink + acc;
        });
        add_row("featurize_infer", full);
      }
    }
  }
  return report;
}

BenchReport bench_accuracy(const AccuracyOptions& options) {
  const auto records = generate(options.sim);
  return bench_accuracy(records, options);
}

BenchReport bench_accuracy(std::span<const FlowRecord> records, const AccuracyOptions& options) {
  if (!(options.train_fraction > 0 && options.train_fraction < 1)) {
    throw ConfigError("train fraction must lie in (0, 1)");
  }
  std::vector<std::size_t> order(records.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  Rng rng(options.seed);
  shuffle(order.begin(), order.end(), rng);
  const auto n_train = static_cast<std::size_t>(std::floor(options.train_fraction * static_cast<double>(records.size())));
  std::vector<FlowRecord> train_rows, test_rows;
  for (std::size_t i = 0; i < order.size(); ++i) {
    const FlowRecord& r = records[order[i]];
    if (!r.label) continue;
    (i < n_train ? train_rows : test_rows).push_back(r);
  }
  auto check = [](const std::vector<FlowRecord>& rows, const char* which) {
    std::size_t anomalies = 0;
    for (const auto& r : rows) anomalies += *r.label == Label::anomaly ? 1 : 0;
    if (rows.empty()) throw EmptyDataset(std::string(which) + " split is empty");
    if (anomalies == 0 || anomalies == rows.size()) {
      throw SingleClassData(std::string(which) + " split contains a single class");
    }
  };
  check(train_rows, "training");
  check(test_rows, "evaluation");

  BenchReport report = new_report(Experiment::accuracy, options.seed);
  for (FeatureSet fs : options.feature_sets) {
    const FeatureCodec codec = fit_codec(train_rows, fs);
    const FeatureMatrix xtr = encode_batch(train_rows, codec);
    const FeatureMatrix xte = encode_batch(test_rows, codec);
    for (ModelKind kind : options.kinds) {
      const TrainedModel model = train(kind, xtr, options.train, {options.seed, 1, 0.0});
      const Metrics m = evaluate(model, xte);
      BenchRow row;
      row.model_kind = std::string(to_string(kind));
      row.feature_set = std::string(to_string(fs));
      row.measure = "holdout";
      row.n_devices = options.sim.n_devices;
      row.accuracy = m.accuracy;
      row.precision = m.precision;
      row.recall = m.recall;
      row.f1 = m.f1;
      report.rows.push_back(std::move(row));
    }
  }
  return report;
}

BenchReport bench_scalability(const ScalabilityOptions& options) {
  if (options.device_counts.empty()) throw ConfigError("device sweep is empty");
  if (options.repetitions < 1) throw ConfigError("repetitions must be at least 1");
  BenchReport report = new_report(Experiment::scalability, options.seed);

  // One model for the whole sweep, trained on a separate corpus.
  SimConfig train_sim;
  train_sim.n_devices = 9;
  train_sim.duration_s = 60;
  train_sim.seed = options.seed + 1;
  const auto train_rows = generate(train_sim);
  LoadedModel bundle;
  bundle.codec = fit_codec(train_rows, options.feature_set);
  bundle.model = train(options.kind, encode_batch(train_rows, bundle.codec), TrainConfig{}, {options.seed, 1, 0.0});

  for (int n : options.device_counts) {
    SimConfig sim;
    sim.n_devices = n;
    sim.duration_s = options.duration_s;
    sim.rate_flows_per_s = options.rate_flows_per_s;
    sim.seed = options.seed;
    const auto records = generate(sim);

    std::vector<double> per_row, p95, throughput, batch_rows;
    std::uint64_t produced_total = 0, verdict_total = 0;
    for (int rep = 0; rep < options.repetitions; ++rep) {
      auto broker = std::make_shared<Broker>();
      TcpBrokerServer server(broker);
      broker->create_topic("flows", options.partitions);

      EngineConfig cfg;
      cfg.batch_interval_ms = options.batch_interval_ms;
      cfg.feature_set = options.feature_set;
      auto sink = std::make_unique<MemorySink>();
      MemorySink* sink_view = sink.get();
      StreamEngine engine(cfg, connect_broker(server.address()), std::move(sink), bundle);
      std::jthread worker([&engine](std::stop_token st) { engine.run(st); });

      auto producer = connect_broker(server.address());
      const auto t0 = Clock::now();
      const std::size_t produced = replay(records, *producer, {"flows", 1.0, 64});
      const auto deadline = Clock::now() + options.drain_timeout;
      while (engine.counters().rows < produced && Clock::now() < deadline) {
        std::this_thread::sleep_for(std::chrono::milliseconds(2));
      }
      const auto t1 = Clock::now();
      worker.request_stop();
      worker.join();

      const EngineCounters c = engine.counters();
      produced_total += produced;
      verdict_total += sink_view->size();
      per_row.push_back(c.mean_us_per_row());
      p95.push_back(c.p95_us_per_row());
      const double secs = std::chrono::duration<double>(t1 - t0).count();
      throughput.push_back(static_cast<double>(c.rows) / secs);
      batch_rows.push_back(c.batches ? static_cast<double>(c.rows) / static_cast<double>(c.batches) : 0.0);
    }
    BenchRow row;
    row.model_kind = std::string(to_string(options.kind));
    row.feature_set = std::string(to_string(options.feature_set));
    row.measure = "end_to_end";
    row.n_devices = n;
    row.batch_size = static_cast<std::size_t>(std::llround(median(batch_rows)));
    row.repetitions = options.repetitions;
    row.mean_us_per_row = median(per_row);
    row.p95_us_per_row = median(p95);
    row.rep_stddev_us = stddev(per_row);
    row.throughput_rows_per_s = median(throughput);
    row.produced = produced_total;
    row.verdicts = verdict_total;
    report.rows.push_back(std::move(row));
  }
  return report;
}

std::string default_run_id(const BenchReport& report) {
  return std::string(to_string(report.experiment)) + "-" + utc_stamp(report.timestamp) + "-s" +
         std::to_string(report.seed);
}

ReportPaths emit_report(const BenchReport& report, const std::filesystem::path& out_dir, const std::string& run_id) {
  const auto dir = out_dir / run_id;
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw IoError("cannot create report dir " + dir.string() + ": " + ec.message());
  ReportPaths paths{dir / "report.jsonl", dir / "report.csv"};

  std::ofstream jsonl(paths.jsonl, std::ios::app);
  if (!jsonl) throw IoError("cannot write " + paths.jsonl.string());
  for (const auto& r : report.rows) jsonl << row_json(report, r, run_id).dump() << '\n';
  if (!jsonl.flush()) throw IoError("write failed for " + paths.jsonl.string());

  std::ofstream csv(paths.csv, std::ios::trunc);
  if (!csv) throw IoError("cannot write " + paths.csv.string());
  const auto& cols = report_columns();
  for (std::size_t i = 0; i < cols.size(); ++i) csv << (i ? "," : "") << cols[i];
  csv << '\n';
  for (const auto& r : report.rows) {
    const auto cells = row_cells(report.experiment, r);
    for (std::size_t i = 0; i < cells.size(); ++i) csv << (i ? "," : "") << cells[i];
    csv << '\n';
  }
  if (!csv.flush()) throw IoError("write failed for " + paths.csv.string());
  return paths;
}

}  // namespace maliot
