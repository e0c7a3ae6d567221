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


#include "maliot/flow_schema.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <unordered_map>

namespace maliot {
namespace {

constexpr std::array<std::string_view, kProtoCount> kProtoNames = {"tcp", "udp", "icmp", "other"};
constexpr std::array<std::string_view, kServiceCount> kServiceNames = {
    "http", "dns", "ssl", "ssh", "irc", "dhcp", "none", "other"};
constexpr std::array<std::string_view, kConnStateCount> kConnStateNames = {
    "S0", "S1", "SF", "REJ", "S2", "S3", "RSTO", "RSTR", "RSTOS0", "RSTRH", "SH", "SHR", "OTH",
    "other"};

bool is_missing(std::string_view token) { return token.empty() || token == "-"; }

std::string lower(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return out;
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\r')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\r' || s.back() == '\n')) s.remove_suffix(1);
  return s;
}

// IoT-23 writes its trailing label columns separated by runs of spaces inside
// a tab-separated file, so any tab field holding a run of two or more spaces
// is split further on whitespace.
std::vector<std::string_view> split_conn_log(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (start <= line.size()) {
    std::size_t tab = line.find('\t', start);
    if (tab == std::string_view::npos) tab = line.size();
    std::string_view field = line.substr(start, tab - start);
    if (field.find("  ") != std::string_view::npos) {
      std::size_t i = 0;
      while (i < field.size()) {
        while (i < field.size() && field[i] == ' ') ++i;
        std::size_t j = i;
        while (j < field.size() && field[j] != ' ') ++j;
        if (j > i) out.push_back(field.substr(i, j - i));
        i = j;
      }
    } else {
      out.push_back(trim(field));
    }
    start = tab + 1;
  }
  return out;
}

// RFC 4180 style: quoted fields may hold commas and doubled quotes.
std::vector<std::string> split_csv(std::string_view line) {
  std::vector<std::string> out;
  std::string cur;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < line.size() && line[i + 1] == '"') {
          cur.push_back('"');
          ++i;
        } else {
          quoted = false;
        }
      } else {
        cur.push_back(c);
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      out.push_back(std::move(cur));
      cur.clear();
    } else if (c != '\r') {
      cur.push_back(c);
    }
  }
  out.push_back(std::move(cur));
  return out;
}

std::string csv_escape(std::string_view s) {
  if (s.find_first_of(",\"\n\r") == std::string_view::npos) return std::string(s);
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out.push_back('"');
    out.push_back(c);
  }
  out.push_back('"');
  return out;
}

[[noreturn]] void bad_numeric(std::string_view column, std::string_view token) {
  throw ParseError(ParseError::Kind::bad_numeric,
                   "non-numeric value '" + std::string(token) + "' in " + std::string(column));
}

std::uint64_t parse_count(std::string_view token, std::string_view column) {
  std::uint64_t v = 0;
  auto [ptr, ec] = std::from_chars(token.data(), token.data() + token.size(), v);
  if (ec == std::errc{} && ptr == token.data() + token.size()) return v;
  // Some exports write integral counts as "12.0".
  double d = 0;
  auto [p2, e2] = std::from_chars(token.data(), token.data() + token.size(), d);
  if (e2 == std::errc{} && p2 == token.data() + token.size() && std::isfinite(d) && d >= 0 &&
      d == std::floor(d) && d < 1.8e19) {
    return static_cast<std::uint64_t>(d);
  }
  bad_numeric(column, token);
}

std::uint64_t count_or_zero(std::string_view token, std::string_view column) {
  return is_missing(token) ? 0 : parse_count(token, column);
}

std::optional<std::uint64_t> optional_count(std::string_view token, std::string_view column) {
  if (is_missing(token)) return std::nullopt;
  return parse_count(token, column);
}

double parse_real(std::string_view token, std::string_view column) {
  double d = 0;
  auto [ptr, ec] = std::from_chars(token.data(), token.data() + token.size(), d);
  if (ec != std::errc{} || ptr != token.data() + token.size() || !std::isfinite(d)) {
    bad_numeric(column, token);
  }
  return d;
}

std::optional<double> optional_duration(std::string_view token) {
  if (is_missing(token)) return std::nullopt;
  const double d = parse_real(token, "duration");
  if (d < 0) bad_numeric("duration", token);
  return d;
}

std::uint16_t parse_port(std::string_view token, std::string_view column) {
  const std::uint64_t v = count_or_zero(token, column);
  if (v > 65535) bad_numeric(column, token);
  return static_cast<std::uint16_t>(v);
}

struct ColumnName {
  std::string_view name;
  Field field;
};

const std::vector<ColumnName>& column_names(SourceDialect dialect) {
  static const std::vector<ColumnName> iot23 = {
      {"ts", Field::ts},
      {"id.orig_h", Field::src_ip},
      {"id.orig_p", Field::src_port},
      {"id.resp_h", Field::dst_ip},
      {"id.resp_p", Field::dst_port},
      {"proto", Field::proto},
      {"service", Field::service},
      {"duration", Field::duration},
      {"orig_bytes", Field::orig_bytes},
      {"resp_bytes", Field::resp_bytes},
      {"conn_state", Field::conn_state},
      {"missed_bytes", Field::missed_bytes},
      {"orig_pkts", Field::orig_pkts},
      {"orig_ip_bytes", Field::orig_ip_bytes},
      {"resp_pkts", Field::resp_pkts},
      {"resp_ip_bytes", Field::resp_ip_bytes},
      {"label", Field::label},
      {"detailed-label", Field::attack_type},
  };
  static const std::vector<ColumnName> ton = {
      {"ts", Field::ts},
      {"src_ip", Field::src_ip},
      {"src_port", Field::src_port},
      {"dst_ip", Field::dst_ip},
      {"dst_port", Field::dst_port},
      {"proto", Field::proto},
      {"service", Field::service},
      {"duration", Field::duration},
      {"src_bytes", Field::orig_bytes},
      {"dst_bytes", Field::resp_bytes},
      {"conn_state", Field::conn_state},
      {"missed_bytes", Field::missed_bytes},
      {"src_pkts", Field::orig_pkts},
      {"src_ip_bytes", Field::orig_ip_bytes},
      {"dst_pkts", Field::resp_pkts},
      {"dst_ip_bytes", Field::resp_ip_bytes},
      {"label", Field::label},
      {"type", Field::attack_type},
  };
  static const std::vector<ColumnName> maliot = {
      {"ts", Field::ts},
      {"src_ip", Field::src_ip},
      {"src_port", Field::src_port},
      {"dst_ip", Field::dst_ip},
      {"dst_port", Field::dst_port},
      {"proto", Field::proto},
      {"service", Field::service},
      {"duration", Field::duration},
      {"orig_bytes", Field::orig_bytes},
      {"resp_bytes", Field::resp_bytes},
      {"conn_state", Field::conn_state},
      {"missed_bytes", Field::missed_bytes},
      {"orig_pkts", Field::orig_pkts},
      {"orig_ip_bytes", Field::orig_ip_bytes},
      {"resp_pkts", Field::resp_pkts},
      {"resp_ip_bytes", Field::resp_ip_bytes},
      {"label", Field::label},
      {"device_id", Field::device_id},
  };
  switch (dialect) {
    case SourceDialect::iot23_conn_log: return iot23;
    case SourceDialect::ton_iot_csv: return ton;
    case SourceDialect::maliot_csv: return maliot;
  }
  return maliot;
}

template <class Token>
std::optional<Label> parse_label(const std::vector<Token>& cols, const ColumnLayout& layout) {
  auto column = [&](Field f) -> std::optional<std::string_view> {
    const int i = layout.at(f);
    if (i < 0) return std::nullopt;
    return std::string_view(cols[static_cast<std::size_t>(i)]);
  };
  const auto label = column(Field::label);
  switch (layout.dialect) {
    case SourceDialect::maliot_csv: {
      if (!label || is_missing(*label)) return std::nullopt;
      if (*label == "benign") return Label::benign;
      if (*label == "anomaly") return Label::anomaly;
      throw ParseError(ParseError::Kind::malformed_row, "unknown label '" + std::string(*label) + "'");
    }
    case SourceDialect::iot23_conn_log: {
      // Detailed attack labels (C&C, DDoS, ...) all collapse to anomaly.
      if (!label || is_missing(*label)) return std::nullopt;
      return lower(*label) == "benign" ? Label::benign : Label::anomaly;
    }
    case SourceDialect::ton_iot_csv: {
      if (label && !is_missing(*label)) {
        const std::string l = lower(*label);
        if (l == "0" || l == "benign" || l == "normal") return Label::benign;
        if (l == "1" || l == "anomaly" || l == "malicious") return Label::anomaly;
        bad_numeric("label", *label);
      }
      const auto type = column(Field::attack_type);
      if (!type || is_missing(*type)) return std::nullopt;
      return lower(*type) == "normal" ? Label::benign : Label::anomaly;
    }
  }
  return std::nullopt;
}

template <class Token>
FlowRecord build_record(const std::vector<Token>& cols, const ColumnLayout& layout) {
  if (cols.size() != layout.column_count) {
    throw ParseError(ParseError::Kind::malformed_row,
                     "expected " + std::to_string(layout.column_count) + " fields, got " +
                         std::to_string(cols.size()));
  }
  auto col = [&](Field f) -> std::string_view {
    const int i = layout.at(f);
    return i < 0 ? std::string_view("-") : std::string_view(cols[static_cast<std::size_t>(i)]);
  };

  FlowRecord r;
  const std::string_view ts = col(Field::ts);
  r.ts = parse_real(ts, "ts");
  r.src_ip = std::string(col(Field::src_ip));
  r.src_port = parse_port(col(Field::src_port), "src_port");
  r.dst_ip = std::string(col(Field::dst_ip));
  r.dst_port = parse_port(col(Field::dst_port), "dst_port");
  r.proto = proto_from_string(col(Field::proto));
  r.service = service_from_string(col(Field::service));
  r.duration = optional_duration(col(Field::duration));
  r.orig_bytes = optional_count(col(Field::orig_bytes), "orig_bytes");
  r.resp_bytes = optional_count(col(Field::resp_bytes), "resp_bytes");
  r.conn_state = conn_state_from_string(col(Field::conn_state));
  r.missed_bytes = count_or_zero(col(Field::missed_bytes), "missed_bytes");
  r.orig_pkts = count_or_zero(col(Field::orig_pkts), "orig_pkts");
  r.orig_ip_bytes = count_or_zero(col(Field::orig_ip_bytes), "orig_ip_bytes");
  r.resp_pkts = count_or_zero(col(Field::resp_pkts), "resp_pkts");
  r.resp_ip_bytes = count_or_zero(col(Field::resp_ip_bytes), "resp_ip_bytes");
  r.label = parse_label(cols, layout);
  if (layout.dialect == SourceDialect::maliot_csv) {
    r.device_id = std::string(cols[static_cast<std::size_t>(layout.at(Field::device_id))]);
  } else {
    r.device_id = r.src_ip;
  }
  return r;
}

}  // namespace

std::string_view to_string(Proto p) { return kProtoNames[static_cast<std::size_t>(p)]; }
std::string_view to_string(Service s) { return kServiceNames[static_cast<std::size_t>(s)]; }
std::string_view to_string(ConnState c) { return kConnStateNames[static_cast<std::size_t>(c)]; }
std::string_view to_string(Label l) { return l == Label::benign ? "benign" : "anomaly"; }

std::string_view to_string(SourceDialect d) {
  switch (d) {
    case SourceDialect::iot23_conn_log: return "iot23_conn_log";
    case SourceDialect::ton_iot_csv: return "ton_iot_csv";
    case SourceDialect::maliot_csv: return "maliot_csv";
  }
  return "?";
}

Proto proto_from_string(std::string_view text) {
  const std::string t = lower(text);
  for (std::size_t i = 0; i + 1 < kProtoNames.size(); ++i) {
    if (t == kProtoNames[i]) return static_cast<Proto>(i);
  }
  return Proto::other;
}

Service service_from_string(std::string_view text) {
  if (is_missing(text)) return Service::none;
  const std::string t = lower(text);
  for (std::size_t i = 0; i + 1 < kServiceNames.size(); ++i) {
    if (t == kServiceNames[i]) return static_cast<Service>(i);
  }
  return Service::other;
}

ConnState conn_state_from_string(std::string_view text) {
  for (std::size_t i = 0; i + 1 < kConnStateNames.size(); ++i) {
    if (text == kConnStateNames[i]) return static_cast<ConnState>(i);
  }
  return ConnState::other;
}

const std::vector<std::string>& default_columns(SourceDialect dialect) {
  // Full IoT-23 labeled conn.log layout (23 columns).
  static const std::vector<std::string> iot23 = {
      "ts", "uid", "id.orig_h", "id.orig_p", "id.resp_h", "id.resp_p", "proto", "service",
      "duration", "orig_bytes", "resp_bytes", "conn_state", "local_orig", "local_resp",
      "missed_bytes", "history", "orig_pkts", "orig_ip_bytes", "resp_pkts", "resp_ip_bytes",
      "tunnel_parents", "label", "detailed-label"};
  // ToN_IoT network dataset layout (45 columns).
  static const std::vector<std::string> ton = {
      "ts", "src_ip", "src_port", "dst_ip", "dst_port", "proto", "service", "duration",
      "src_bytes", "dst_bytes", "conn_state", "missed_bytes", "src_pkts", "src_ip_bytes",
      "dst_pkts", "dst_ip_bytes", "dns_query", "dns_qclass", "dns_qtype", "dns_rcode", "dns_AA",
      "dns_RD", "dns_RA", "dns_rejected", "ssl_version", "ssl_cipher", "ssl_resumed",
      "ssl_established", "ssl_subject", "ssl_issuer", "http_trans_depth", "http_method",
      "http_uri", "http_version", "http_request_body_len", "http_response_body_len",
      "http_status_code", "http_user_agent", "http_orig_mime_types", "http_resp_mime_types",
      "weird_name", "weird_addl", "weird_notice", "label", "type"};
  static const std::vector<std::string> maliot = [] {
    std::vector<std::string> cols;
    for (const auto& c : column_names(SourceDialect::maliot_csv)) cols.emplace_back(c.name);
    return cols;
  }();
  switch (dialect) {
    case SourceDialect::iot23_conn_log: return iot23;
    case SourceDialect::ton_iot_csv: return ton;
    case SourceDialect::maliot_csv: return maliot;
  }
  return maliot;
}

namespace {

ColumnLayout layout_from_names(const std::vector<std::string_view>& names, SourceDialect dialect) {
  ColumnLayout layout;
  layout.dialect = dialect;
  layout.column_count = names.size();
  layout.index.fill(-1);
  std::unordered_map<std::string_view, Field> lookup;
  for (const auto& c : column_names(dialect)) lookup.emplace(c.name, c.field);
  for (std::size_t i = 0; i < names.size(); ++i) {
    auto it = lookup.find(names[i]);
    if (it != lookup.end()) layout.index[static_cast<std::size_t>(it->second)] = static_cast<int>(i);
  }
  for (const auto& c : column_names(dialect)) {
    const bool optional = c.field == Field::label || c.field == Field::attack_type;
    if (!optional && layout.at(c.field) < 0) {
      throw DataError(std::string(to_string(dialect)) + " header is missing column '" +
                      std::string(c.name) + "'");
    }
  }
  return layout;
}

}  // namespace

ColumnLayout default_layout(SourceDialect dialect) {
  const auto& cols = default_columns(dialect);
  std::vector<std::string_view> names(cols.begin(), cols.end());
  return layout_from_names(names, dialect);
}

ColumnLayout layout_from_header(std::string_view header, SourceDialect dialect) {
  if (dialect == SourceDialect::iot23_conn_log) {
    if (header.starts_with("#fields")) header.remove_prefix(7);
    while (!header.empty() && (header.front() == '\t' || header.front() == ' ')) header.remove_prefix(1);
    return layout_from_names(split_conn_log(header), dialect);
  }
  const auto cols = split_csv(header);
  std::vector<std::string_view> names;
  names.reserve(cols.size());
  for (const auto& c : cols) names.push_back(trim(c));
  return layout_from_names(names, dialect);
}

FlowRecord parse_record(std::string_view line, SourceDialect dialect) {
  static const std::array<ColumnLayout, 3> layouts = {
      default_layout(SourceDialect::iot23_conn_log), default_layout(SourceDialect::ton_iot_csv),
      default_layout(SourceDialect::maliot_csv)};
  return parse_record(line, layouts[static_cast<std::size_t>(dialect)]);
}

FlowRecord parse_record(std::string_view line, const ColumnLayout& layout) {
  while (!line.empty() && (line.back() == '\r' || line.back() == '\n')) line.remove_suffix(1);
  if (layout.dialect == SourceDialect::iot23_conn_log) {
    return build_record(split_conn_log(line), layout);
  }
  return build_record(split_csv(line), layout);
}

const std::string& maliot_header() {
  static const std::string header = [] {
    std::string h;
    for (const auto& c : default_columns(SourceDialect::maliot_csv)) {
      if (!h.empty()) h.push_back(',');
      h += c;
    }
    return h;
  }();
  return header;
}

std::string format_record(const FlowRecord& r) {
  std::string out;
  out.reserve(160);
  auto sep = [&] { out.push_back(','); };
  auto num = [&](std::uint64_t v) { out += std::to_string(v); };
  out += format_double(r.ts);
  sep();
  out += csv_escape(r.src_ip);
  sep();
  num(r.src_port);
  sep();
  out += csv_escape(r.dst_ip);
  sep();
  num(r.dst_port);
  sep();
  out += to_string(r.proto);
  sep();
  out += to_string(r.service);
  sep();
  out += r.duration ? format_double(*r.duration) : "-";
  sep();
  out += r.orig_bytes ? std::to_string(*r.orig_bytes) : "-";
  sep();
  out += r.resp_bytes ? std::to_string(*r.resp_bytes) : "-";
  sep();
  out += to_string(r.conn_state);
  sep();
  num(r.missed_bytes);
  sep();
  num(r.orig_pkts);
  sep();
  num(r.orig_ip_bytes);
  sep();
  num(r.resp_pkts);
  sep();
  num(r.resp_ip_bytes);
  sep();
  out += r.label ? to_string(*r.label) : "-";
  sep();
  out += csv_escape(r.device_id);
  return out;
}

FlowReader::FlowReader(const std::filesystem::path& path, SourceDialect dialect)
    : in_(path), dialect_(dialect) {
  if (!in_) throw IoError("cannot open " + path.string());
}

bool FlowReader::ensure_layout(std::string_view line) {
  if (dialect_ == SourceDialect::iot23_conn_log) {
    if (line.starts_with("#")) {
      if (line.starts_with("#fields")) layout_ = layout_from_header(line, dialect_);
      return false;
    }
    if (!layout_) layout_ = default_layout(dialect_);
    return true;
  }
  if (!layout_) {
    layout_ = layout_from_header(line, dialect_);
    return false;
  }
  return true;
}

std::optional<FlowRecord> FlowReader::next() {
  while (std::getline(in_, line_)) {
    std::string_view line = line_;
    while (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (line.empty()) continue;
    if (!ensure_layout(line)) continue;
    try {
      FlowRecord r = parse_record(line, *layout_);
      ++stats_.rows_ok;
      ++stats_.label_counts[r.label ? std::string(to_string(*r.label)) : "-"];
      return r;
    } catch (const ParseError&) {
      ++stats_.rows_rejected;
    }
  }
  if (in_.bad()) throw IoError("read error");
  return std::nullopt;
}

Dataset read_dataset(const std::filesystem::path& path, SourceDialect dialect) {
  FlowReader reader(path, dialect);
  Dataset ds;
  while (auto r = reader.next()) ds.records.push_back(std::move(*r));
  ds.stats = reader.stats();
  return ds;
}

SourceDialect detect_dialect(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  std::string line;
  while (std::getline(in, line)) {
    std::string_view l = trim(line);
    if (l.empty()) continue;
    if (l.starts_with("#")) return SourceDialect::iot23_conn_log;
    if (l == maliot_header() || l.find("device_id") != std::string_view::npos) {
      return SourceDialect::maliot_csv;
    }
    if (l.find("src_bytes") != std::string_view::npos) return SourceDialect::ton_iot_csv;
    if (l.find('\t') != std::string_view::npos) return SourceDialect::iot23_conn_log;
    break;
  }
  throw DataError("cannot determine the flow format of " + path.string());
}

std::size_t write_records(std::span<const FlowRecord> records, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  out << maliot_header() << '\n';
  for (const auto& r : records) out << format_record(r) << '\n';
  out.flush();
  if (!out) throw IoError("write failed for " + path.string());
  return records.size();
}

}  // namespace maliot
