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

#include <array>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "maliot/common.hpp"

namespace maliot {

enum class Proto : std::uint8_t { tcp, udp, icmp, other };
enum class Service : std::uint8_t { http, dns, ssl, ssh, irc, dhcp, none, other };
// Zeek connection states, then `other` for anything unrecognised.
enum class ConnState : std::uint8_t {
  S0, S1, SF, REJ, S2, S3, RSTO, RSTR, RSTOS0, RSTRH, SH, SHR, OTH, other
};
enum class Label : std::uint8_t { benign = 0, anomaly = 1 };

inline constexpr std::size_t kProtoCount = 4;
inline constexpr std::size_t kServiceCount = 8;
inline constexpr std::size_t kConnStateCount = 14;

std::string_view to_string(Proto p);
std::string_view to_string(Service s);
std::string_view to_string(ConnState c);
std::string_view to_string(Label l);
Proto proto_from_string(std::string_view text);
Service service_from_string(std::string_view text);
ConnState conn_state_from_string(std::string_view text);

/// One unified network flow. Optional numerics carry the explicit "missing"
/// state; count fields default to 0 when the source marks them missing.
struct FlowRecord {
  double ts = 0.0;
  std::string src_ip;
  std::uint16_t src_port = 0;
  std::string dst_ip;
  std::uint16_t dst_port = 0;
  Proto proto = Proto::other;
  Service service = Service::none;
  std::optional<double> duration;
  std::optional<std::uint64_t> orig_bytes;
  std::optional<std::uint64_t> resp_bytes;
  ConnState conn_state = ConnState::OTH;
  std::uint64_t missed_bytes = 0;
  std::uint64_t orig_pkts = 0;
  std::uint64_t orig_ip_bytes = 0;
  std::uint64_t resp_pkts = 0;
  std::uint64_t resp_ip_bytes = 0;
  std::optional<Label> label;  // unlabeled live traffic has no label
  std::string device_id;

  bool operator==(const FlowRecord&) const = default;
};

enum class SourceDialect { iot23_conn_log, ton_iot_csv, maliot_csv };

std::string_view to_string(SourceDialect d);

class ParseError : public DataError {
 public:
  enum class Kind { malformed_row, bad_numeric };
  ParseError(Kind kind, const std::string& what) : DataError(what), kind_(kind) {}
  Kind kind() const noexcept { return kind_; }

 private:
  Kind kind_;
};

/// Unified fields a parser can locate in a source row.
enum class Field : std::uint8_t {
  ts, src_ip, src_port, dst_ip, dst_port, proto, service, duration, orig_bytes,
  resp_bytes, conn_state, missed_bytes, orig_pkts, orig_ip_bytes, resp_pkts,
  resp_ip_bytes, label, device_id, attack_type,
  count_
};
inline constexpr std::size_t kFieldCount = static_cast<std::size_t>(Field::count_);

/// Where each unified field lives in a row of some dialect.
struct ColumnLayout {
  SourceDialect dialect = SourceDialect::maliot_csv;
  std::size_t column_count = 0;
  std::array<int, kFieldCount> index{};  // -1 when the source has no such column

  int at(Field f) const { return index[static_cast<std::size_t>(f)]; }
};

/// Column names of the canonical header of each dialect, in order.
const std::vector<std::string>& default_columns(SourceDialect dialect);
ColumnLayout default_layout(SourceDialect dialect);

/// Layout from a header. For conn.log pass the `#fields` line; for the CSV
/// dialects the header row.
ColumnLayout layout_from_header(std::string_view header, SourceDialect dialect);

FlowRecord parse_record(std::string_view line, SourceDialect dialect);
FlowRecord parse_record(std::string_view line, const ColumnLayout& layout);

/// The fixed 18-column header of the maliot_csv dialect (no trailing newline).
const std::string& maliot_header();

/// One maliot_csv data row for `record` (no trailing newline).
std::string format_record(const FlowRecord& record);

struct ParseStats {
  std::size_t rows_ok = 0;
  std::size_t rows_rejected = 0;
  std::map<std::string, std::size_t> label_counts;  // "benign", "anomaly", "-"
};

/// Streaming reader over one flow file. Rejected rows are counted and
/// skipped; only an unreadable file is fatal.
class FlowReader {
 public:
  FlowReader(const std::filesystem::path& path, SourceDialect dialect);

  std::optional<FlowRecord> next();
  const ParseStats& stats() const noexcept { return stats_; }

 private:
  bool ensure_layout(std::string_view line);

  std::ifstream in_;
  SourceDialect dialect_;
  std::optional<ColumnLayout> layout_;
  ParseStats stats_;
  std::string line_;
};

struct Dataset {
  std::vector<FlowRecord> records;
  ParseStats stats;
};

Dataset read_dataset(const std::filesystem::path& path, SourceDialect dialect);

/// Sniffs the dialect from the first non-empty line of a file.
SourceDialect detect_dialect(const std::filesystem::path& path);

/// Writes maliot_csv; returns the number of data rows written.
std::size_t write_records(std::span<const FlowRecord> records, const std::filesystem::path& path);

}  // namespace maliot
