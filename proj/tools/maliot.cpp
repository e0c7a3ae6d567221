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


#include <csignal>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <numeric>
#include <sstream>
#include <thread>

#include "CLI11.hpp"
#include "maliot/bench.hpp"
#include "maliot/broker.hpp"
#include "maliot/classifiers.hpp"
#include "maliot/featurizer.hpp"
#include "maliot/flow_schema.hpp"
#include "maliot/stream_engine.hpp"
#include "maliot/traffic_sim.hpp"
#include "maliot/wire.hpp"

namespace {

using namespace maliot;

enum ExitCode { kOk = 0, kFailure = 1, kUsage = 2, kData = 3, kIo = 4, kNetwork = 5 };

enum class LogLevel { error, warn, info, debug };
LogLevel g_log_level = LogLevel::info;

void log(LogLevel level, const std::string& message) {
  if (level > g_log_level) return;
  static constexpr const char* kNames[] = {"error", "warn", "info", "debug"};
  std::cerr << "[" << kNames[static_cast<int>(level)] << "] " << message << '\n';
}

volatile std::sig_atomic_t g_stop = 0;
volatile std::sig_atomic_t g_reload = 0;

void on_signal(int sig) {
  if (sig == SIGHUP) {
    g_reload = 1;
  } else {
    g_stop = 1;
  }
}

void install_signal_handlers() {
  struct sigaction sa {};
  sa.sa_handler = on_signal;
  sigemptyset(&sa.sa_mask);
  sigaction(SIGINT, &sa, nullptr);
  sigaction(SIGTERM, &sa, nullptr);
  sigaction(SIGHUP, &sa, nullptr);
}

std::vector<ModelKind> parse_kinds(const std::vector<std::string>& names) {
  std::vector<ModelKind> out;
  for (const auto& n : names) {
    if (n == "all") return {kAllModelKinds.begin(), kAllModelKinds.end()};
    out.push_back(model_kind_from_string(n));
  }
  return out;
}

std::vector<FeatureSet> parse_feature_sets(const std::vector<std::string>& names) {
  std::vector<FeatureSet> out;
  for (const auto& n : names) out.push_back(feature_set_from_string(n));
  return out;
}

// "1:9" → 1..9, "1,3,5" → {1,3,5}.
std::vector<int> parse_device_sweep(const std::string& text) {
  std::vector<int> out;
  try {
    if (const auto colon = text.find(':'); colon != std::string::npos) {
      const int lo = std::stoi(text.substr(0, colon));
      const int hi = std::stoi(text.substr(colon + 1));
      if (lo < 1 || hi < lo) throw ConfigError("device range must satisfy 1 <= lo <= hi");
      for (int n = lo; n <= hi; ++n) out.push_back(n);
    } else {
      std::stringstream ss(text);
      std::string item;
      while (std::getline(ss, item, ',')) {
        const int n = std::stoi(item);
        if (n < 1) throw ConfigError("device counts must be positive");
        out.push_back(n);
      }
    }
  } catch (const std::logic_error&) {
    throw ConfigError("invalid device sweep '" + text + "' (use lo:hi or a comma list)");
  }
  if (out.empty()) throw ConfigError("device sweep is empty");
  return out;
}

double parse_rate(const std::string& text) {
  if (text == "inf" || text == "max") return kAsFastAsPossible;
  try {
    std::size_t used = 0;
    const double v = std::stod(text, &used);
    if (used != text.size() || !(v > 0)) throw std::invalid_argument(text);
    return v;
  } catch (const std::logic_error&) {
    throw ConfigError("rate multiplier must be a positive number or 'inf', got '" + text + "'");
  }
}

std::vector<FlowRecord> read_inputs(const std::vector<std::string>& files) {
  std::vector<FlowRecord> all;
  for (const auto& f : files) {
    const SourceDialect dialect = detect_dialect(f);
    Dataset d = read_dataset(f, dialect);
    log(LogLevel::info, f + ": " + std::string(to_string(dialect)) + ", " + std::to_string(d.stats.rows_ok) +
                            " rows, " + std::to_string(d.stats.rows_rejected) + " rejected");
    std::move(d.records.begin(), d.records.end(), std::back_inserter(all));
  }
  return all;
}

void print_report_paths(const ReportPaths& p) {
  std::cout << "report: " << p.jsonl.string() << "\n"
            << "csv: " << p.csv.string() << "\n";
}

void print_rows(const BenchReport& report) {
  const auto& cols = report_columns();
  for (std::size_t i = 0; i < cols.size(); ++i) std::cout << (i ? "," : "") << cols[i];
  std::cout << '\n';
  for (const auto& r : report.rows) {
    auto cell = [](const auto& v) -> std::string {
      if (!v) return {};
      if constexpr (std::is_floating_point_v<std::decay_t<decltype(*v)>>) {
        return format_double(*v);
      } else {
        return std::to_string(*v);
      }
    };
    std::cout << to_string(report.experiment) << ',' << r.model_kind << ',' << r.feature_set << ',' << r.measure
              << ',' << cell(r.n_devices) << ',' << cell(r.batch_size) << ',' << cell(r.repetitions) << ','
              << cell(r.mean_us_per_row) << ',' << cell(r.p95_us_per_row) << ',' << cell(r.rep_stddev_us) << ','
              << cell(r.throughput_rows_per_s) << ',' << cell(r.produced) << ',' << cell(r.verdicts) << ','
              << cell(r.accuracy) << ',' << cell(r.precision) << ',' << cell(r.recall) << ',' << cell(r.f1)
              << '\n';
  }
}

struct Globals {
  std::uint64_t seed = 1;
  std::string log_level = "info";
};

// ---- gen ----------------------------------------------------------------------

struct GenArgs {
  SimConfig sim;
  std::string out;
  std::string to_broker;
  std::string topic = "flows";
  int partitions = 3;
};

int run_gen(const Globals& g, GenArgs a) {
  if (a.out.empty() == a.to_broker.empty()) throw ConfigError("gen needs exactly one of --out or --to-broker");
  a.sim.seed = g.seed;
  const auto records = generate(a.sim);
  if (!a.out.empty()) {
    const auto n = write_records(records, a.out);
    log(LogLevel::info, "wrote " + std::to_string(n) + " flows to " + a.out);
  } else {
    auto client = connect_broker(a.to_broker);
    client->create_topic(a.topic, a.partitions, true);
    const auto n = replay(records, *client, {a.topic, kAsFastAsPossible, 256});
    log(LogLevel::info, "produced " + std::to_string(n) + " flows to " + a.to_broker);
  }
  return kOk;
}

// ---- train --------------------------------------------------------------------

struct TrainArgs {
  std::string model;
  std::string features = "full";
  std::vector<std::string> data;
  std::string out;
  double train_fraction = 0.8;
  std::int64_t version = 1;
  TrainConfig config;
};

int run_train(const Globals& g, const TrainArgs& a) {
  const ModelKind kind = model_kind_from_string(a.model);
  const FeatureSet fs = feature_set_from_string(a.features);
  if (!(a.train_fraction > 0 && a.train_fraction < 1)) throw ConfigError("--train-fraction must lie in (0, 1)");
  a.config.mlp.validate();

  std::vector<FlowRecord> rows;
  for (auto& r : read_inputs(a.data)) {
    if (r.label) rows.push_back(std::move(r));
  }
  if (rows.size() < 2) throw EmptyDataset("training needs at least 2 labeled rows");
  std::vector<std::size_t> order(rows.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  Rng rng(g.seed);
  shuffle(order.begin(), order.end(), rng);
  const auto n_train = std::max<std::size_t>(2, static_cast<std::size_t>(a.train_fraction * static_cast<double>(rows.size())));
  std::vector<FlowRecord> train_rows, test_rows;
  for (std::size_t i = 0; i < order.size(); ++i) (i < n_train ? train_rows : test_rows).push_back(rows[order[i]]);

  const FeatureCodec codec = fit_codec(train_rows, fs);
  const TrainedModel model =
      train(kind, encode_batch(train_rows, codec), a.config, {g.seed, a.version, wall_clock_seconds()});
  save_model(model, a.out);
  save_codec(codec, codec_path_for(a.out));
  log(LogLevel::info, "saved " + a.out + " and " + codec_path_for(a.out).string());

  std::cout << "model=" << to_string(kind) << " features=" << to_string(fs) << " train_rows=" << train_rows.size()
            << " test_rows=" << test_rows.size();
  if (!test_rows.empty()) {
    const Metrics m = evaluate(model, encode_batch(test_rows, codec));
    std::cout << " accuracy=" << format_double(m.accuracy) << " precision=" << format_double(m.precision)
              << " recall=" << format_double(m.recall) << " f1=" << format_double(m.f1);
  }
  std::cout << '\n';
  return kOk;
}

// ---- broker -------------------------------------------------------------------

struct BrokerArgs {
  std::string host = "127.0.0.1";
  int port = 9092;
  std::string data_dir = "broker-data";
  std::size_t partition_bound = 1'000'000;
  std::string fsync = "interval";
  int fsync_interval_ms = 50;
  int backpressure_timeout_ms = 5000;
  std::string topic;
  int partitions = 3;
  std::string port_file;
};

int run_broker(const BrokerArgs& a) {
  if (a.port < 0 || a.port > 65535) throw ConfigError("--port must be in [0, 65535]");
  BrokerConfig cfg;
  cfg.data_dir = a.data_dir;
  cfg.partition_bound = a.partition_bound;
  cfg.backpressure_timeout = std::chrono::milliseconds(a.backpressure_timeout_ms);
  cfg.fsync_interval = std::chrono::milliseconds(a.fsync_interval_ms);
  if (a.fsync == "every_message") {
    cfg.fsync = FsyncPolicy::every_message;
  } else if (a.fsync == "interval") {
    cfg.fsync = FsyncPolicy::interval;
  } else {
    throw ConfigError("--fsync must be every_message or interval");
  }
  install_signal_handlers();
  auto broker = std::make_shared<Broker>(cfg);
  if (!a.topic.empty()) broker->create_topic(a.topic, a.partitions, true);
  TcpBrokerServer server(broker, a.host, static_cast<std::uint16_t>(a.port));
  log(LogLevel::info, "broker listening on " + server.address());
  if (!a.port_file.empty()) {
    std::ofstream pf(a.port_file + ".tmp");
    pf << server.address() << '\n';
    pf.close();
    std::filesystem::rename(a.port_file + ".tmp", a.port_file);
  }
  while (!g_stop) std::this_thread::sleep_for(std::chrono::milliseconds(50));
  server.stop();
  broker->sync();
  log(LogLevel::info, "broker stopped");
  return kOk;
}

// ---- serve --------------------------------------------------------------------

struct ServeArgs {
  std::string broker;
  std::string model;
  std::string features;
  int batch_interval_ms = 1000;
  std::size_t max_batch_rows = 10000;
  std::string persist_dir;
  std::string sink = "jsonl_file";
  std::string sink_path = "verdicts.jsonl";
  std::string sink_address;
  std::string topic = "flows";
  std::string group = "maliot-engine";
  int max_idle_ms = 0;
  std::uint64_t max_rows = 0;
};

int run_serve(const ServeArgs& a) {
  EngineConfig cfg;
  cfg.batch_interval_ms = a.batch_interval_ms;
  cfg.max_batch_rows = a.max_batch_rows;
  cfg.model_path = a.model;
  cfg.persist_dir = a.persist_dir;
  cfg.sink = sink_kind_from_string(a.sink);
  cfg.sink_path = a.sink_path;
  cfg.sink_address = a.sink_address;
  cfg.topic = a.topic;
  cfg.group = a.group;
  if (a.max_idle_ms < 0) throw ConfigError("--max-idle-ms must be non-negative");
  parse_host_port(a.broker);
  cfg.validate();
  LoadedModel bundle = load_model_bundle(a.model);
  cfg.feature_set = a.features.empty() ? bundle.codec.feature_set : feature_set_from_string(a.features);
  cfg.validate();

  install_signal_handlers();
  auto client = connect_broker(a.broker);
  StreamEngine engine(cfg, std::move(client), make_sink(cfg), std::move(bundle));
  log(LogLevel::info, "serving model version " + std::to_string(engine.model_version()) + " from " + a.model);

  auto last_data = std::chrono::steady_clock::now();
  while (!g_stop) {
    if (g_reload) {
      g_reload = 0;
      try {
        engine.hot_swap_model(a.model);
        log(LogLevel::info, "staged model reload from " + a.model);
      } catch (const Error& e) {
        log(LogLevel::warn, std::string("model reload rejected: ") + e.what());
      }
    }
    std::size_t consumed = 0;
    try {
      consumed = engine.run_once();
    } catch (const BrokerError& e) {
      if (e.code() != BrokerErrc::unknown_topic) throw;
      std::this_thread::sleep_for(std::chrono::milliseconds(cfg.batch_interval_ms));
    }
    const auto now = std::chrono::steady_clock::now();
    if (consumed > 0) {
      last_data = now;
      log(LogLevel::debug, "batch of " + std::to_string(consumed) + " rows, model version " +
                               std::to_string(engine.model_version()));
    }
    if (a.max_rows > 0 && engine.counters().rows >= a.max_rows) break;
    if (a.max_idle_ms > 0 && now - last_data >= std::chrono::milliseconds(a.max_idle_ms)) break;
  }
  std::cerr << counters_summary(engine.counters()) << '\n';
  return kOk;
}

// ---- replay -------------------------------------------------------------------

struct ReplayArgs {
  std::string broker;
  std::string data;
  std::string rate = "1";
  std::string topic = "flows";
  int partitions = 3;
};

int run_replay(const ReplayArgs& a) {
  const double rate = parse_rate(a.rate);
  parse_host_port(a.broker);
  if (a.partitions < 1) throw ConfigError("--partitions must be at least 1");
  const Dataset d = read_dataset(a.data, detect_dialect(a.data));
  auto client = connect_broker(a.broker);
  client->create_topic(a.topic, a.partitions, true);
  const auto n = replay(d.records, *client, {a.topic, rate, 256});
  std::cout << n << '\n';
  return kOk;
}

// ---- bench --------------------------------------------------------------------

struct BenchArgs {
  std::vector<std::string> kinds = {"all"};
  std::vector<std::string> features = {"full", "deid"};
  int devices = 9;
  double duration = 600;
  double overlap = 0.0;
  int reps = 5;
  std::vector<std::size_t> batch_sizes = {1, 1000};
  std::size_t rows = 10000;
  std::string sweep = "1:9";
  std::string model = "decision_tree";
  double rate = 20;
  double sweep_duration = 3;
  int interval_ms = 200;
  std::string out_dir = "bench_out";
  std::string run_id;
};

int finish_bench(const BenchReport& report, const BenchArgs& a) {
  print_rows(report);
  print_report_paths(emit_report(report, a.out_dir, a.run_id.empty() ? default_run_id(report) : a.run_id));
  return kOk;
}

int run_bench_inference(const Globals& g, const BenchArgs& a) {
  SimConfig sim;
  sim.n_devices = a.devices;
  sim.duration_s = a.duration;
  sim.seed = g.seed;
  auto records = generate(sim);
  if (records.size() < 2 * a.rows) throw InsufficientData("simulated corpus is too small for --rows");
  // Train on the first part, time on the last `rows` flows.
  const std::span<const FlowRecord> train_part(records.data(), records.size() - a.rows);
  const std::span<const FlowRecord> time_part(records.data() + records.size() - a.rows, a.rows);
  std::vector<BenchModel> models;
  for (FeatureSet fs : parse_feature_sets(a.features)) {
    const FeatureCodec codec = fit_codec(train_part, fs);
    const FeatureMatrix x = encode_batch(train_part, codec);
    for (ModelKind k : parse_kinds(a.kinds)) {
      log(LogLevel::info, "training " + std::string(to_string(k)) + "/" + std::string(to_string(fs)));
      models.push_back({train(k, x, TrainConfig{}, {g.seed, 1, 0.0}), codec});
    }
  }
  InferenceOptions opt;
  opt.repetitions = a.reps;
  opt.batch_sizes = a.batch_sizes;
  return finish_bench(bench_inference(models, time_part, opt, g.seed), a);
}

int run_bench_accuracy(const Globals& g, const BenchArgs& a) {
  AccuracyOptions opt;
  opt.kinds = parse_kinds(a.kinds);
  opt.feature_sets = parse_feature_sets(a.features);
  opt.sim.n_devices = a.devices;
  opt.sim.duration_s = a.duration;
  opt.sim.overlap = a.overlap;
  opt.sim.seed = g.seed;
  opt.seed = g.seed;
  return finish_bench(bench_accuracy(opt), a);
}

int run_bench_scalability(const Globals& g, const BenchArgs& a) {
  ScalabilityOptions opt;
  opt.device_counts = parse_device_sweep(a.sweep);
  opt.kind = model_kind_from_string(a.model);
  opt.feature_set = parse_feature_sets(a.features).front();
  opt.rate_flows_per_s = a.rate;
  opt.duration_s = a.sweep_duration;
  opt.batch_interval_ms = a.interval_ms;
  opt.repetitions = std::max(1, a.reps);
  opt.seed = g.seed;
  return finish_bench(bench_scalability(opt), a);
}

// ---- retrain ------------------------------------------------------------------

struct RetrainArgs {
  std::string persist_dir;
  std::string model;
  std::string features = "full";
  std::string out;
  std::int64_t version = 0;
  std::string current;
};

int run_retrain(const Globals& g, const RetrainArgs& a) {
  std::int64_t version = a.version;
  if (version == 0) version = a.current.empty() ? 1 : load_model(a.current).version + 1;
  const auto result = retrain_from_persisted(a.persist_dir, model_kind_from_string(a.model),
                                             feature_set_from_string(a.features), TrainConfig{},
                                             {g.seed, version, wall_clock_seconds()});
  save_model(result.model, a.out);
  save_codec(result.codec, codec_path_for(a.out));
  std::cout << "model=" << to_string(result.model.kind) << " version=" << result.model.version
            << " rows=" << result.rows << " out=" << a.out << '\n';
  return kOk;
}

int main_impl(int argc, char** argv) {
  CLI::App app{"IoT malware traffic detection pipeline", "maliot"};
  app.set_config("--config", "", "Read options from an INI/TOML file (flags override it)");
  app.require_subcommand(1);
  Globals g;
  app.add_option("--seed", g.seed, "Seed for every random choice")->capture_default_str();
  app.add_option("--log-level", g.log_level, "error, warn, info or debug")
      ->check(CLI::IsMember({"error", "warn", "info", "debug"}))
      ->capture_default_str();

  GenArgs gen;
  auto* gen_cmd = app.add_subcommand("gen", "Generate a synthetic flow dataset");
  gen_cmd->add_option("--devices", gen.sim.n_devices, "Number of simulated devices")->capture_default_str();
  gen_cmd->add_option("--duration", gen.sim.duration_s, "Simulated seconds per device")->capture_default_str();
  gen_cmd->add_option("--fraction", gen.sim.anomaly_device_fraction, "Share of malicious devices")
      ->capture_default_str();
  gen_cmd->add_option("--rate", gen.sim.rate_flows_per_s, "Flows per second per device")->capture_default_str();
  gen_cmd->add_option("--overlap", gen.sim.overlap, "Probability of an ambiguous, coin-labelled flow")
      ->capture_default_str();
  gen_cmd->add_option("--out", gen.out, "Output maliot CSV file");
  gen_cmd->add_option("--to-broker", gen.to_broker, "Produce to a broker at host:port instead of a file");
  gen_cmd->add_option("--topic", gen.topic, "Topic for --to-broker")->capture_default_str();
  gen_cmd->add_option("--partitions", gen.partitions, "Partitions if the topic is created")->capture_default_str();

  TrainArgs tr;
  auto* train_cmd = app.add_subcommand("train", "Fit a codec and a classifier, print held-out metrics");
  train_cmd->add_option("--model", tr.model, "random_forest, decision_tree, logistic_regression, linear_svm, gaussian_nb or ann")
      ->required();
  train_cmd->add_option("--features", tr.features, "full or deid")->capture_default_str();
  train_cmd->add_option("--data", tr.data, "Input files (conn.log, ToN_IoT CSV or maliot CSV)")->required();
  train_cmd->add_option("--out", tr.out, "Model file; the codec goes next to it")->required();
  train_cmd->add_option("--train-fraction", tr.train_fraction, "Share of rows used for training")
      ->capture_default_str();
  train_cmd->add_option("--version", tr.version, "Model version number")->capture_default_str();
  train_cmd->add_option("--trees", tr.config.forest.n_trees, "Random forest size")->capture_default_str();
  train_cmd->add_option("--max-depth", tr.config.tree.max_depth, "Tree depth limit")->capture_default_str();
  train_cmd->add_option("--epochs", tr.config.mlp.n_epoch, "ANN epochs")->capture_default_str();
  train_cmd->add_flag("--fail-closed", tr.config.tree.fail_closed, "Resolve score ties to anomaly");

  BrokerArgs br;
  auto* broker_cmd = app.add_subcommand("broker", "Run the message broker until SIGINT/SIGTERM");
  broker_cmd->add_option("--host", br.host, "Listen address")->capture_default_str();
  broker_cmd->add_option("--port", br.port, "Listen port (0 picks a free one)")->capture_default_str();
  broker_cmd->add_option("--data-dir", br.data_dir, "Log and offset directory")->capture_default_str();
  broker_cmd->add_option("--partition-bound", br.partition_bound, "Uncommitted messages per partition before backpressure")
      ->capture_default_str();
  broker_cmd->add_option("--fsync", br.fsync, "every_message or interval")->capture_default_str();
  broker_cmd->add_option("--fsync-interval-ms", br.fsync_interval_ms, "Sync interval for --fsync interval")
      ->capture_default_str();
  broker_cmd->add_option("--backpressure-timeout-ms", br.backpressure_timeout_ms, "Producer wait before failing")
      ->capture_default_str();
  broker_cmd->add_option("--topic", br.topic, "Create this topic at startup");
  broker_cmd->add_option("--partitions", br.partitions, "Partitions for --topic")->capture_default_str();
  broker_cmd->add_option("--port-file", br.port_file, "Write the bound host:port here once listening");

  ServeArgs sv;
  auto* serve_cmd = app.add_subcommand("serve", "Consume flows, emit verdicts; SIGHUP reloads the model");
  serve_cmd->add_option("--broker", sv.broker, "Broker host:port")->required();
  serve_cmd->add_option("--model", sv.model, "Model file (codec read from <model>.codec.json)")->required();
  serve_cmd->add_option("--features", sv.features, "full or deid (default: the codec's)");
  serve_cmd->add_option("--batch-interval-ms", sv.batch_interval_ms, "Micro-batch interval")->capture_default_str();
  serve_cmd->add_option("--max-batch-rows", sv.max_batch_rows, "Micro-batch row cap")->capture_default_str();
  serve_cmd->add_option("--persist-dir", sv.persist_dir, "Append raw rows here for retraining");
  serve_cmd->add_option("--sink", sv.sink, "jsonl_file, stdout or tcp")->capture_default_str();
  serve_cmd->add_option("--sink-path", sv.sink_path, "File for the jsonl_file sink")->capture_default_str();
  serve_cmd->add_option("--sink-address", sv.sink_address, "host:port for the tcp sink");
  serve_cmd->add_option("--topic", sv.topic, "Topic to consume")->capture_default_str();
  serve_cmd->add_option("--group", sv.group, "Consumer group")->capture_default_str();
  serve_cmd->add_option("--max-idle-ms", sv.max_idle_ms, "Exit after this long without data (0: never)")
      ->capture_default_str();
  serve_cmd->add_option("--max-rows", sv.max_rows, "Exit after consuming this many rows (0: never)")
      ->capture_default_str();

  ReplayArgs rp;
  auto* replay_cmd = app.add_subcommand("replay", "Produce a flow file to the broker keyed by device");
  replay_cmd->add_option("--broker", rp.broker, "Broker host:port")->required();
  replay_cmd->add_option("--data", rp.data, "Flow file to replay")->required();
  replay_cmd->add_option("--rate", rp.rate, "Speed-up over recorded time, or 'inf'")->capture_default_str();
  replay_cmd->add_option("--topic", rp.topic, "Target topic")->capture_default_str();
  replay_cmd->add_option("--partitions", rp.partitions, "Partitions if the topic is created")->capture_default_str();

  BenchArgs bn;
  auto* bench_cmd = app.add_subcommand("bench", "Run a measurement experiment");
  bench_cmd->require_subcommand(1);
  bench_cmd->add_option("--out-dir", bn.out_dir, "Report directory")->capture_default_str();
  bench_cmd->add_option("--run-id", bn.run_id, "Report subdirectory (default: experiment-time-seed)");
  auto* b_inf = bench_cmd->add_subcommand("inference", "Per-row inference time by model");
  b_inf->add_option("--kinds", bn.kinds, "Model kinds or 'all'")->capture_default_str();
  b_inf->add_option("--features", bn.features, "Feature sets")->capture_default_str();
  b_inf->add_option("--devices", bn.devices, "Simulated devices")->capture_default_str();
  b_inf->add_option("--duration", bn.duration, "Simulated seconds")->capture_default_str();
  b_inf->add_option("--reps", bn.reps, "Timed repetitions (>= 5)")->capture_default_str();
  b_inf->add_option("--batch-sizes", bn.batch_sizes, "Batch sizes; 1 is the single-row path")->capture_default_str();
  b_inf->add_option("--rows", bn.rows, "Rows timed per pass")->capture_default_str();
  auto* b_acc = bench_cmd->add_subcommand("accuracy", "Held-out accuracy by model and feature set");
  b_acc->add_option("--kinds", bn.kinds, "Model kinds or 'all'")->capture_default_str();
  b_acc->add_option("--features", bn.features, "Feature sets")->capture_default_str();
  b_acc->add_option("--devices", bn.devices, "Simulated devices")->capture_default_str();
  b_acc->add_option("--duration", bn.duration, "Simulated seconds")->capture_default_str();
  b_acc->add_option("--overlap", bn.overlap, "Ambiguous-flow probability")->capture_default_str();
  auto* b_scale = bench_cmd->add_subcommand("scalability", "End-to-end latency and throughput by device count");
  b_scale->add_option("--devices", bn.sweep, "Sweep as lo:hi or a comma list")->capture_default_str();
  b_scale->add_option("--model", bn.model, "Model kind")->capture_default_str();
  b_scale->add_option("--features", bn.features, "Feature set (first is used)")->capture_default_str();
  b_scale->add_option("--rate", bn.rate, "Flows per second per device")->capture_default_str();
  b_scale->add_option("--duration", bn.sweep_duration, "Replay seconds per device count")->capture_default_str();
  b_scale->add_option("--interval-ms", bn.interval_ms, "Engine batch interval")->capture_default_str();
  b_scale->add_option("--reps", bn.reps, "Repetitions per device count")->capture_default_str();

  RetrainArgs rt;
  auto* retrain_cmd = app.add_subcommand("retrain", "Train a new model version from persisted rows");
  retrain_cmd->add_option("--persist-dir", rt.persist_dir, "Directory written by serve --persist-dir")->required();
  retrain_cmd->add_option("--model", rt.model, "Model kind")->required();
  retrain_cmd->add_option("--features", rt.features, "full or deid")->capture_default_str();
  retrain_cmd->add_option("--out", rt.out, "Output model file")->required();
  retrain_cmd->add_option("--version", rt.version, "Version of the new model (default: current + 1)");
  retrain_cmd->add_option("--current", rt.current, "Serving model file, used to pick the next version");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kUsage;
  }

  g_log_level = g.log_level == "error"  ? LogLevel::error
                : g.log_level == "warn" ? LogLevel::warn
                : g.log_level == "debug" ? LogLevel::debug
                                         : LogLevel::info;

  if (*gen_cmd) return run_gen(g, gen);
  if (*train_cmd) return run_train(g, tr);
  if (*broker_cmd) return run_broker(br);
  if (*serve_cmd) return run_serve(sv);
  if (*replay_cmd) return run_replay(rp);
  if (*b_inf) return run_bench_inference(g, bn);
  if (*b_acc) return run_bench_accuracy(g, bn);
  if (*b_scale) return run_bench_scalability(g, bn);
  if (*retrain_cmd) return run_retrain(g, rt);
  return kUsage;
}

}  // namespace

int main(int argc, char** argv) {
  try {
    return main_impl(argc, argv);
  } catch (const ConfigError& e) {
    log(LogLevel::error, e.what());
    return kUsage;
  } catch (const DataError& e) {
    log(LogLevel::error, e.what());
    return kData;
  } catch (const IoError& e) {
    log(LogLevel::error, e.what());
    return kIo;
  } catch (const NetworkError& e) {
    log(LogLevel::error, e.what());
    return kNetwork;
  } catch (const std::exception& e) {
    log(LogLevel::error, e.what());
    return kFailure;
  }
}
