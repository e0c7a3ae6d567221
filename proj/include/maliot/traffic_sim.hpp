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
#include <limits>
#include <string>
#include <vector>

#include "maliot/broker.hpp"
#include "maliot/flow_schema.hpp"

namespace maliot {

enum class Behavior { benign_periodic, benign_bursty, mal_ddos, mal_cnc_beacon, mal_portscan };

std::string_view to_string(Behavior b);
bool is_malicious(Behavior b) noexcept;

struct DeviceProfile {
  std::string device_id;
  std::string ip;
  Behavior behavior = Behavior::benign_periodic;
  double rate_flows_per_s = 10.0;
};

/// Profile constants. Defaults make the full feature set near-separable
/// while C&C beacons and port scans copy benign telemetry and benign failed
/// connections outside the address/port columns.
struct ProfileParams {
  std::uint16_t telemetry_port = 1883;
  std::uint16_t cnc_port = 6667;
  double telemetry_bytes = 240.0;  // median originator bytes of a telemetry or beacon flow
  double benign_failure_rate = 0.15;  // share of bursty-device flows that fail (S0/REJ)
  double ddos_pkts = 200.0;  // median originator packets of a flood flow
  int scan_port_max = 1024;
};

struct SimConfig {
  int n_devices = 9;
  double duration_s = 600.0;
  double anomaly_device_fraction = 0.349;
  std::uint64_t seed = 1;
  double rate_flows_per_s = 10.0;
  /// Probability that a flow is drawn from the benign template of its device
  /// class and given a fair-coin label; 0 keeps the classes near-separable.
  double overlap = 0.0;
  /// Base timestamp (seconds since epoch) of the first flow.
  double start_ts = 1.6e9;
  ProfileParams profiles;

  void validate() const;  // throws ConfigError
};

/// Device i is malicious iff round((i+1)f) > round(i f), which spreads
/// exactly round(n f) malicious devices evenly over the index range.
std::vector<DeviceProfile> make_devices(const SimConfig& config);

/// Flows of every device merged by timestamp (ties by device index).
/// Deterministic for a config; device i uses substream i of the seed, so
/// adding devices never changes the flows of existing ones.
std::vector<FlowRecord> generate(const SimConfig& config);

/// Flows of one device only.
std::vector<FlowRecord> generate_device(const SimConfig& config, const DeviceProfile& device, int index);

struct ReplayOptions {
  std::string topic = "flows";
  /// Inter-arrival times are divided by this; infinity sends as fast as possible.
  double rate_multiplier = 1.0;
  std::size_t batch_size = 64;  // messages per produce_batch call when unthrottled
};

/// Produces every record keyed by device_id; returns the number sent.
std::size_t replay(std::span<const FlowRecord> records, BrokerClient& client, const ReplayOptions& options);
std::size_t replay_file(const std::filesystem::path& path, BrokerClient& client, const ReplayOptions& options);

inline constexpr double kAsFastAsPossible = std::numeric_limits<double>::infinity();

}  // namespace maliot
