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


#include "maliot/traffic_sim.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <thread>

namespace maliot {
namespace {

struct Endpoint {
  std::string ip;
  std::uint16_t port = 0;
};

std::string lan_ip(int index) {
  return "192.168." + std::to_string(index / 254) + "." + std::to_string(index % 254 + 1);
}

std::string public_ip(Rng& rng) {
  // 52.0.0.0/8 and 34.0.0.0/8 are public cloud ranges; avoid .0 and .255 hosts.
  const int first = rng.bernoulli(0.5) ? 52 : 34;
  return std::to_string(first) + "." + std::to_string(rng.below(256)) + "." + std::to_string(rng.below(256)) +
         "." + std::to_string(1 + rng.below(254));
}

std::uint64_t positive_count(double value) {
  return static_cast<std::uint64_t>(std::max(0.0, std::round(value)));
}

double round_us(double seconds) { return std::round(seconds * 1e6) / 1e6; }

std::uint16_t ephemeral_port(Rng& rng) { return static_cast<std::uint16_t>(32768 + rng.below(28232)); }

void fill_ip_bytes(FlowRecord& r) {
  r.orig_ip_bytes = r.orig_bytes.value_or(0) + 40 * r.orig_pkts;
  r.resp_ip_bytes = r.resp_bytes.value_or(0) + 40 * r.resp_pkts;
}

// Small fixed-size exchange: sensor telemetry, and the C&C beacon that
// imitates it.
void telemetry(FlowRecord& r, Rng& rng, const ProfileParams& pp, const Endpoint& dst) {
  r.proto = Proto::tcp;
  r.service = Service::none;
  r.dst_ip = dst.ip;
  r.dst_port = dst.port;
  r.conn_state = ConnState::SF;
  r.duration = round_us(rng.lognormal(std::log(0.05), 0.3));
  r.orig_bytes = positive_count(rng.lognormal(std::log(pp.telemetry_bytes), 0.1));
  r.resp_bytes = positive_count(rng.lognormal(std::log(pp.telemetry_bytes / 4), 0.1));
  r.orig_pkts = 4 + rng.below(3);
  r.resp_pkts = 3 + rng.below(3);
  fill_ip_bytes(r);
}

void dns(FlowRecord& r, Rng& rng) {
  r.proto = Proto::udp;
  r.service = Service::dns;
  r.dst_ip = "8.8.8.8";
  r.dst_port = 53;
  r.conn_state = ConnState::SF;
  r.duration = round_us(rng.lognormal(std::log(0.02), 0.5));
  r.orig_bytes = positive_count(rng.lognormal(std::log(40), 0.2));
  r.resp_bytes = positive_count(rng.lognormal(std::log(90), 0.4));
  r.orig_pkts = 1;
  r.resp_pkts = 1;
  fill_ip_bytes(r);
}

void web(FlowRecord& r, Rng& rng, const Endpoint& dst) {
  r.proto = Proto::tcp;
  r.service = dst.port == 443 ? Service::ssl : Service::http;
  r.dst_ip = dst.ip;
  r.dst_port = dst.port;
  r.conn_state = ConnState::SF;
  r.duration = round_us(rng.lognormal(std::log(1.5), 1.0));
  r.orig_bytes = positive_count(rng.lognormal(std::log(2000), 1.0));
  r.resp_bytes = positive_count(rng.lognormal(std::log(50000), 1.2));
  r.orig_pkts = std::max<std::uint64_t>(3, positive_count(static_cast<double>(*r.orig_bytes) / 500.0));
  r.resp_pkts = std::max<std::uint64_t>(3, positive_count(static_cast<double>(*r.resp_bytes) / 1400.0));
  fill_ip_bytes(r);
}

// Unanswered or refused connection attempt: benign retries and scan probes
// share this shape.
void failed_connection(FlowRecord& r, Rng& rng, const Endpoint& dst) {
  r.proto = Proto::tcp;
  r.service = Service::none;
  r.dst_ip = dst.ip;
  r.dst_port = dst.port;
  const bool refused = rng.bernoulli(0.4);
  r.conn_state = refused ? ConnState::REJ : ConnState::S0;
  r.orig_pkts = rng.bernoulli(0.3) ? 2 : 1;
  r.resp_pkts = refused ? 1 : 0;
  if (r.orig_pkts > 1) {
    r.duration = round_us(rng.uniform(0.5, 3.0));
  } else {
    r.duration.reset();
  }
  r.orig_bytes = 0;
  r.resp_bytes = 0;
  fill_ip_bytes(r);
}

void flood(FlowRecord& r, Rng& rng, const ProfileParams& pp, const Endpoint& dst) {
  r.proto = Proto::tcp;
  r.service = Service::none;
  r.dst_ip = dst.ip;
  r.dst_port = dst.port;
  r.conn_state = ConnState::S0;
  r.duration = round_us(rng.uniform(0.0, 1e-3));
  r.orig_pkts = std::max<std::uint64_t>(20, positive_count(rng.lognormal(std::log(pp.ddos_pkts), 0.5)));
  r.resp_pkts = 0;
  r.orig_bytes = 0;
  r.resp_bytes = 0;
  fill_ip_bytes(r);
}

double flow_offset(Behavior b, std::uint64_t k, double rate, Rng& rng) {
  const double period = 1.0 / rate;
  if (b == Behavior::benign_bursty) {
    // Bursts of five flows 5 ms apart, one burst per five periods.
    const std::uint64_t burst = k / 5;
    return static_cast<double>(burst) * 5.0 * period + static_cast<double>(k % 5) * 0.005 +
           rng.uniform(0.0, 0.001);
  }
  return static_cast<double>(k) * period + rng.uniform(0.0, 0.02 * period);
}

}  // namespace

std::string_view to_string(Behavior b) {
  switch (b) {
    case Behavior::benign_periodic: return "benign_periodic";
    case Behavior::benign_bursty: return "benign_bursty";
    case Behavior::mal_ddos: return "mal_ddos";
    case Behavior::mal_cnc_beacon: return "mal_cnc_beacon";
    case Behavior::mal_portscan: return "mal_portscan";
  }
  return "?";
}

bool is_malicious(Behavior b) noexcept {
  return b == Behavior::mal_ddos || b == Behavior::mal_cnc_beacon || b == Behavior::mal_portscan;
}

void SimConfig::validate() const {
  if (n_devices < 1 || n_devices > 254 * 256) throw ConfigError("device count must be in [1, 65024]");
  if (!(duration_s > 0) || !std::isfinite(duration_s)) throw ConfigError("duration must be positive");
  if (!(anomaly_device_fraction >= 0.0 && anomaly_device_fraction <= 1.0)) {
    throw ConfigError("anomaly device fraction must lie in [0, 1]");
  }
  if (!(rate_flows_per_s > 0) || !std::isfinite(rate_flows_per_s)) throw ConfigError("rate must be positive");
  if (!(overlap >= 0.0 && overlap <= 1.0)) throw ConfigError("overlap must lie in [0, 1]");
  if (!(profiles.telemetry_bytes > 0) || !(profiles.ddos_pkts > 0) || profiles.scan_port_max < 1 ||
      !(profiles.benign_failure_rate >= 0 && profiles.benign_failure_rate <= 1)) {
    throw ConfigError("invalid profile parameters");
  }
}

std::vector<DeviceProfile> make_devices(const SimConfig& config) {
  config.validate();
  static constexpr Behavior kBenign[] = {Behavior::benign_periodic, Behavior::benign_bursty};
  static constexpr Behavior kMalicious[] = {Behavior::mal_ddos, Behavior::mal_cnc_beacon, Behavior::mal_portscan};
  const double f = config.anomaly_device_fraction;
  std::vector<DeviceProfile> devices;
  std::size_t benign = 0, malicious = 0;
  for (int i = 0; i < config.n_devices; ++i) {
    const bool bad = std::floor((i + 1) * f + 0.5) > std::floor(i * f + 0.5);
    DeviceProfile d;
    d.ip = lan_ip(i);
    d.device_id = d.ip;
    d.behavior = bad ? kMalicious[malicious++ % 3] : kBenign[benign++ % 2];
    d.rate_flows_per_s = config.rate_flows_per_s;
    devices.push_back(std::move(d));
  }
  return devices;
}

std::vector<FlowRecord> generate_device(const SimConfig& config, const DeviceProfile& device, int index) {
  const ProfileParams& pp = config.profiles;
  Rng rng = Rng(config.seed).split(static_cast<std::uint64_t>(index));
  const auto count = static_cast<std::uint64_t>(std::floor(config.duration_s * device.rate_flows_per_s));

  // Per-device fixed peers.
  const Endpoint telemetry_peer{public_ip(rng), pp.telemetry_port};
  const Endpoint cnc_peer{public_ip(rng), pp.cnc_port};
  const Endpoint victim{public_ip(rng), 80};
  std::vector<std::string> web_pool;
  for (int i = 0; i < 5; ++i) web_pool.push_back(public_ip(rng));

  const bool bad = is_malicious(device.behavior);
  std::vector<FlowRecord> flows;
  flows.reserve(count);
  for (std::uint64_t k = 0; k < count; ++k) {
    FlowRecord r;
    r.ts = round_us(config.start_ts + flow_offset(device.behavior, k, device.rate_flows_per_s, rng));
    r.src_ip = device.ip;
    r.src_port = ephemeral_port(rng);
    r.device_id = device.device_id;
    r.label = bad ? Label::anomaly : Label::benign;

    if (config.overlap > 0 && rng.bernoulli(config.overlap)) {
      telemetry(r, rng, pp, telemetry_peer);
      r.label = rng.bernoulli(0.5) ? Label::anomaly : Label::benign;
      flows.push_back(std::move(r));
      continue;
    }
    switch (device.behavior) {
      case Behavior::benign_periodic:
        if (rng.bernoulli(0.85)) {
          telemetry(r, rng, pp, telemetry_peer);
        } else {
          dns(r, rng);
        }
        break;
      case Behavior::benign_bursty: {
        const double u = rng.uniform();
        const Endpoint peer{web_pool[rng.below(web_pool.size())], static_cast<std::uint16_t>(rng.bernoulli(0.8) ? 443 : 80)};
        if (u < pp.benign_failure_rate) {
          failed_connection(r, rng, peer);
        } else if (u < pp.benign_failure_rate + 0.1) {
          dns(r, rng);
        } else {
          web(r, rng, peer);
        }
        break;
      }
      case Behavior::mal_ddos:
        flood(r, rng, pp, victim);
        break;
      case Behavior::mal_cnc_beacon:
        telemetry(r, rng, pp, cnc_peer);
        break;
      case Behavior::mal_portscan: {
        const Endpoint target{lan_ip(static_cast<int>(rng.below(254))),
                              static_cast<std::uint16_t>(1 + rng.below(static_cast<std::uint64_t>(pp.scan_port_max)))};
        failed_connection(r, rng, target);
        break;
      }
    }
    flows.push_back(std::move(r));
  }
  std::stable_sort(flows.begin(), flows.end(), [](const FlowRecord& a, const FlowRecord& b) { return a.ts < b.ts; });
  return flows;
}

std::vector<FlowRecord> generate(const SimConfig& config) {
  const auto devices = make_devices(config);
  std::vector<std::vector<FlowRecord>> per_device;
  std::size_t total = 0;
  for (std::size_t i = 0; i < devices.size(); ++i) {
    per_device.push_back(generate_device(config, devices[i], static_cast<int>(i)));
    total += per_device.back().size();
  }
  struct Ref {
    double ts;
    std::uint32_t device;
    std::uint32_t index;
  };
  std::vector<Ref> order;
  order.reserve(total);
  for (std::uint32_t d = 0; d < per_device.size(); ++d) {
    for (std::uint32_t i = 0; i < per_device[d].size(); ++i) order.push_back({per_device[d][i].ts, d, i});
  }
  std::sort(order.begin(), order.end(), [](const Ref& a, const Ref& b) {
    if (a.ts != b.ts) return a.ts < b.ts;
    if (a.device != b.device) return a.device < b.device;
    return a.index < b.index;
  });
  std::vector<FlowRecord> out;
  out.reserve(total);
  for (const auto& ref : order) out.push_back(std::move(per_device[ref.device][ref.index]));
  return out;
}

std::size_t replay(std::span<const FlowRecord> records, BrokerClient& client, const ReplayOptions& options) {
  if (!(options.rate_multiplier > 0)) throw ConfigError("rate multiplier must be positive");
  if (options.batch_size < 1) throw ConfigError("replay batch size must be at least 1");
  if (records.empty()) return 0;
  const bool throttled = std::isfinite(options.rate_multiplier);
  const double t0 = records.front().ts;
  const auto start = std::chrono::steady_clock::now();
  std::vector<KeyedPayload> pending;
  std::size_t sent = 0;
  auto flush = [&] {
    if (pending.empty()) return;
    client.produce_batch(options.topic, pending);
    sent += pending.size();
    pending.clear();
  };
  for (const auto& r : records) {
    if (throttled) {
      const auto due = start + std::chrono::duration_cast<std::chrono::steady_clock::duration>(
                                   std::chrono::duration<double>((r.ts - t0) / options.rate_multiplier));
      if (due > std::chrono::steady_clock::now()) {
        flush();
        std::this_thread::sleep_until(due);
      }
    }
    pending.push_back({r.device_id, format_record(r)});
    if (pending.size() >= options.batch_size) flush();
  }
  flush();
  return sent;
}

std::size_t replay_file(const std::filesystem::path& path, BrokerClient& client, const ReplayOptions& options) {
  const Dataset data = read_dataset(path, detect_dialect(path));
  return replay(data.records, client, options);
}

}  // namespace maliot
