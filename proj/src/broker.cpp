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


#include "maliot/broker.hpp"

#include <fcntl.h>
#include <unistd.h>

#include <algorithm>
#include <atomic>
#include <cstring>
#include <fstream>
#include <sstream>
#include <optional>

#include "json.hpp"

namespace maliot {
namespace fs = std::filesystem;
using json = nlohmann::json;

namespace {

// Log record: u32 key length, u32 payload length, u64 checksum (fnv1a64 of
// key then payload), key bytes, payload bytes. All integers little-endian.
constexpr std::size_t kRecordHeader = 16;

void put_u32(std::string& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}
void put_u64(std::string& out, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}
std::uint64_t get_le(const char* p, int bytes) {
  std::uint64_t v = 0;
  for (int i = bytes - 1; i >= 0; --i) v = (v << 8) | static_cast<unsigned char>(p[i]);
  return v;
}

std::uint64_t record_checksum(std::string_view key, std::string_view payload) {
  return fnv1a64(payload, fnv1a64(key));
}

void write_all(int fd, std::string_view bytes, const fs::path& path) {
  while (!bytes.empty()) {
    const ssize_t n = ::write(fd, bytes.data(), bytes.size());
    if (n < 0) {
      if (errno == EINTR) continue;
      throw IoError("write failed for " + path.string() + ": " + std::strerror(errno));
    }
    bytes.remove_prefix(static_cast<std::size_t>(n));
  }
}

void write_file_atomic(const fs::path& path, std::string_view content) {
  const fs::path tmp = path.string() + ".tmp";
  const int fd = ::open(tmp.c_str(), O_WRONLY | O_CREAT | O_TRUNC | O_CLOEXEC, 0644);
  if (fd < 0) throw IoError("cannot write " + tmp.string() + ": " + std::strerror(errno));
  try {
    write_all(fd, content, tmp);
  } catch (...) {
    ::close(fd);
    throw;
  }
  ::fdatasync(fd);
  ::close(fd);
  std::error_code ec;
  fs::rename(tmp, path, ec);
  if (ec) throw IoError("cannot rename " + tmp.string() + ": " + ec.message());
}

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void validate_topic_name(const std::string& name) {
  const bool ok = !name.empty() && name.size() <= 200 && name != "." && name != ".." &&
                  std::all_of(name.begin(), name.end(), [](char c) {
                    return std::isalnum(static_cast<unsigned char>(c)) || c == '.' || c == '_' || c == '-';
                  });
  if (!ok) throw ConfigError("invalid topic name '" + name + "' (use letters, digits, '.', '_', '-')");
}

}  // namespace

std::string_view to_string(BrokerErrc code) {
  switch (code) {
    case BrokerErrc::unknown_topic: return "UnknownTopic";
    case BrokerErrc::topic_exists: return "TopicExists";
    case BrokerErrc::bad_partition_count: return "BadPartitionCount";
    case BrokerErrc::offset_out_of_range: return "OffsetOutOfRange";
    case BrokerErrc::backpressure_timeout: return "BackpressureTimeout";
    case BrokerErrc::protocol: return "ProtocolError";
  }
  return "ProtocolError";
}

int partition_for_key(std::string_view key, int partitions) noexcept {
  return static_cast<int>(fnv1a64(key) % static_cast<std::uint64_t>(partitions));
}

struct Broker::Partition {
  mutable std::mutex mu;
  std::vector<KeyedPayload> log;
  fs::path path;
  int fd = -1;
  bool dirty = false;
  std::int64_t last_sync_us = 0;

  ~Partition() {
    if (fd >= 0) {
      if (dirty) ::fdatasync(fd);
      ::close(fd);
    }
  }
};

struct Broker::Topic {
  std::string name;
  std::vector<std::unique_ptr<Partition>> parts;
};

struct Broker::Group {
  std::mutex mu;
  std::vector<std::string> members;  // join order = rank
  OffsetMap committed;
  std::vector<std::int64_t> position;
  std::size_t cursor = 0;
};

Broker::Broker(BrokerConfig config) : config_(std::move(config)) {
  if (config_.partition_bound < 1) throw ConfigError("partition bound must be at least 1");
  if (config_.fsync_interval.count() < 1) throw ConfigError("fsync interval must be positive");
  if (!config_.data_dir.empty()) {
    std::error_code ec;
    fs::create_directories(config_.data_dir / "topics", ec);
    fs::create_directories(config_.data_dir / "groups", ec);
    if (ec) throw IoError("cannot create broker data dir " + config_.data_dir.string() + ": " + ec.message());
    recover();
  }
}

Broker::~Broker() = default;

void Broker::recover() {
  for (const auto& entry : fs::directory_iterator(config_.data_dir / "topics")) {
    if (!entry.is_directory() || !fs::exists(entry.path() / "meta.json")) continue;
    json meta;
    try {
      meta = json::parse(read_file(entry.path() / "meta.json"));
    } catch (const json::exception& e) {
      throw DataError("corrupt topic metadata in " + entry.path().string() + ": " + e.what());
    }
    auto topic = std::make_unique<Topic>();
    topic->name = meta.at("name").get<std::string>();
    const int n = meta.at("partitions").get<int>();
    for (int p = 0; p < n; ++p) {
      auto part = std::make_unique<Partition>();
      part->path = entry.path() / (std::to_string(p) + ".log");
      std::string bytes = fs::exists(part->path) ? read_file(part->path) : std::string();
      std::size_t pos = 0;
      while (pos + kRecordHeader <= bytes.size()) {
        const auto klen = static_cast<std::size_t>(get_le(bytes.data() + pos, 4));
        const auto plen = static_cast<std::size_t>(get_le(bytes.data() + pos + 4, 4));
        const auto sum = get_le(bytes.data() + pos + 8, 8);
        if (pos + kRecordHeader + klen + plen > bytes.size()) break;
        std::string_view key(bytes.data() + pos + kRecordHeader, klen);
        std::string_view payload(bytes.data() + pos + kRecordHeader + klen, plen);
        if (record_checksum(key, payload) != sum) break;
        part->log.push_back({std::string(key), std::string(payload)});
        pos += kRecordHeader + klen + plen;
      }
      // Drop a torn tail left by a crash mid-append.
      if (pos != bytes.size()) fs::resize_file(part->path, pos);
      part->fd = ::open(part->path.c_str(), O_WRONLY | O_CREAT | O_APPEND | O_CLOEXEC, 0644);
      if (part->fd < 0) throw IoError("cannot open " + part->path.string() + ": " + std::strerror(errno));
      topic->parts.push_back(std::move(part));
    }
    topics_[topic->name] = std::move(topic);
  }
  for (const auto& entry : fs::directory_iterator(config_.data_dir / "groups")) {
    if (entry.path().extension() != ".json") continue;
    json doc;
    try {
      doc = json::parse(read_file(entry.path()));
    } catch (const json::exception& e) {
      throw DataError("corrupt group offsets in " + entry.path().string() + ": " + e.what());
    }
    const auto name = doc.at("group").get<std::string>();
    const auto topic = doc.at("topic").get<std::string>();
    auto it = topics_.find(topic);
    if (it == topics_.end()) continue;
    auto g = std::make_unique<Group>();
    g->position.assign(it->second->parts.size(), 0);
    for (const auto& [p, o] : doc.at("offsets").items()) {
      const int part = std::stoi(p);
      if (part < 0 || part >= static_cast<int>(it->second->parts.size())) continue;
      // Unsynced log data may have been lost; never point past the log end.
      const auto end = static_cast<std::int64_t>(it->second->parts[static_cast<std::size_t>(part)]->log.size());
      g->committed[part] = std::min(o.get<std::int64_t>(), end);
    }
    for (const auto& [p, o] : g->committed) g->position[static_cast<std::size_t>(p)] = o;
    groups_[{name, topic}] = std::move(g);
  }
}

int Broker::create_topic(const std::string& name, int partitions, bool if_not_exists) {
  validate_topic_name(name);
  std::unique_lock lock(topics_mutex_);
  if (auto it = topics_.find(name); it != topics_.end()) {
    if (if_not_exists) return static_cast<int>(it->second->parts.size());
    throw BrokerError(BrokerErrc::topic_exists, "topic '" + name + "' already exists");
  }
  if (partitions < 1 || partitions > 4096) {
    throw BrokerError(BrokerErrc::bad_partition_count,
                      "partition count must be in [1, 4096], got " + std::to_string(partitions));
  }
  auto topic = std::make_unique<Topic>();
  topic->name = name;
  fs::path dir;
  if (!config_.data_dir.empty()) {
    dir = config_.data_dir / "topics" / name;
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw IoError("cannot create " + dir.string() + ": " + ec.message());
  }
  for (int p = 0; p < partitions; ++p) {
    auto part = std::make_unique<Partition>();
    if (!dir.empty()) {
      part->path = dir / (std::to_string(p) + ".log");
      part->fd = ::open(part->path.c_str(), O_WRONLY | O_CREAT | O_TRUNC | O_APPEND | O_CLOEXEC, 0644);
      if (part->fd < 0) throw IoError("cannot open " + part->path.string() + ": " + std::strerror(errno));
    }
    topic->parts.push_back(std::move(part));
  }
  // Metadata last: a topic directory without meta.json is ignored on recovery.
  if (!dir.empty()) write_file_atomic(dir / "meta.json", json{{"name", name}, {"partitions", partitions}}.dump());
  topics_[name] = std::move(topic);
  return partitions;
}

bool Broker::has_topic(const std::string& name) const {
  std::shared_lock lock(topics_mutex_);
  return topics_.contains(name);
}

Broker::Topic& Broker::topic_ref(const std::string& name) const {
  std::shared_lock lock(topics_mutex_);
  auto it = topics_.find(name);
  if (it == topics_.end()) throw BrokerError(BrokerErrc::unknown_topic, "unknown topic '" + name + "'");
  // Topics are never removed, so the reference outlives the lock.
  return *it->second;
}

int Broker::partition_count(const std::string& topic) const {
  return static_cast<int>(topic_ref(topic).parts.size());
}

std::vector<std::int64_t> Broker::end_offsets(const std::string& topic) const {
  const Topic& t = topic_ref(topic);
  std::vector<std::int64_t> out;
  for (const auto& p : t.parts) {
    std::lock_guard lock(p->mu);
    out.push_back(static_cast<std::int64_t>(p->log.size()));
  }
  return out;
}

std::int64_t Broker::min_committed(const std::string& topic, int partition) const {
  std::optional<std::int64_t> lowest;
  std::lock_guard lock(groups_mutex_);
  for (const auto& [key, g] : groups_) {
    if (key.second != topic) continue;
    std::lock_guard glock(g->mu);
    auto it = g->committed.find(partition);
    const std::int64_t c = it == g->committed.end() ? 0 : it->second;
    lowest = lowest ? std::min(*lowest, c) : c;
  }
  return lowest.value_or(0);
}

ProduceResult Broker::produce(const std::string& topic, std::string key, std::string payload) {
  if (key.size() > 0xffff'ffffu || payload.size() > 0xffff'ffffu) {
    throw BrokerError(BrokerErrc::protocol, "message too large");
  }
  Topic& t = topic_ref(topic);
  const int p = partition_for_key(key, static_cast<int>(t.parts.size()));
  Partition& part = *t.parts[static_cast<std::size_t>(p)];

  const auto deadline = std::chrono::steady_clock::now() + config_.backpressure_timeout;
  for (;;) {
    std::uint64_t gen;
    {
      std::lock_guard lock(signal_mutex_);
      gen = generation_;
    }
    std::int64_t length;
    {
      std::lock_guard lock(part.mu);
      length = static_cast<std::int64_t>(part.log.size());
    }
    if (length - min_committed(topic, p) < static_cast<std::int64_t>(config_.partition_bound)) break;
    std::unique_lock lock(signal_mutex_);
    if (!signal_.wait_until(lock, deadline, [&] { return generation_ != gen; })) {
      throw BrokerError(BrokerErrc::backpressure_timeout,
                        "partition " + std::to_string(p) + " of '" + topic + "' is full");
    }
  }

  ProduceResult result{p, 0};
  {
    std::lock_guard lock(part.mu);
    result.offset = static_cast<std::int64_t>(part.log.size());
    if (part.fd >= 0) {
      std::string record;
      record.reserve(kRecordHeader + key.size() + payload.size());
      put_u32(record, static_cast<std::uint32_t>(key.size()));
      put_u32(record, static_cast<std::uint32_t>(payload.size()));
      put_u64(record, record_checksum(key, payload));
      record += key;
      record += payload;
      write_all(part.fd, record, part.path);
      part.dirty = true;
      const auto now = now_us();
      if (config_.fsync == FsyncPolicy::every_message ||
          now - part.last_sync_us >= config_.fsync_interval.count() * 1000) {
        ::fdatasync(part.fd);
        part.dirty = false;
        part.last_sync_us = now;
      }
    }
    part.log.push_back({std::move(key), std::move(payload)});
  }
  {
    std::lock_guard lock(signal_mutex_);
    ++generation_;
  }
  signal_.notify_all();
  return result;
}

void Broker::sync() {
  std::vector<Partition*> parts;
  {
    std::shared_lock lock(topics_mutex_);
    for (const auto& [name, t] : topics_) {
      for (const auto& p : t->parts) parts.push_back(p.get());
    }
  }
  for (auto* p : parts) {
    std::lock_guard lock(p->mu);
    if (p->fd >= 0 && p->dirty) {
      ::fdatasync(p->fd);
      p->dirty = false;
      p->last_sync_us = now_us();
    }
  }
}

Broker::Group& Broker::group_ref(const std::string& group, const std::string& topic) {
  const Topic& t = topic_ref(topic);
  std::lock_guard lock(groups_mutex_);
  auto& slot = groups_[{group, topic}];
  if (!slot) {
    slot = std::make_unique<Group>();
    slot->position.assign(t.parts.size(), 0);
  }
  return *slot;
}

void Broker::rebalance(Group& g) {
  for (std::size_t p = 0; p < g.position.size(); ++p) {
    auto it = g.committed.find(static_cast<int>(p));
    g.position[p] = it == g.committed.end() ? 0 : it->second;
  }
  g.cursor = 0;
}

void Broker::join(const std::string& group, const std::string& topic, const std::string& member) {
  Group& g = group_ref(group, topic);
  std::lock_guard lock(g.mu);
  if (std::find(g.members.begin(), g.members.end(), member) != g.members.end()) return;
  g.members.push_back(member);
  rebalance(g);
}

void Broker::leave(const std::string& group, const std::string& topic, const std::string& member) {
  Group& g = group_ref(group, topic);
  std::lock_guard lock(g.mu);
  auto it = std::find(g.members.begin(), g.members.end(), member);
  if (it == g.members.end()) return;
  g.members.erase(it);
  rebalance(g);
}

std::vector<int> Broker::assignment(const std::string& group, const std::string& topic,
                                    const std::string& member) {
  join(group, topic, member);
  Group& g = group_ref(group, topic);
  std::lock_guard lock(g.mu);
  const auto rank = static_cast<std::size_t>(
      std::find(g.members.begin(), g.members.end(), member) - g.members.begin());
  std::vector<int> out;
  for (std::size_t p = 0; p < g.position.size(); ++p) {
    if (p % g.members.size() == rank) out.push_back(static_cast<int>(p));
  }
  return out;
}

std::vector<Message> Broker::poll(const std::string& group, const std::string& topic,
                                  const std::string& member, std::size_t max_messages,
                                  std::chrono::milliseconds timeout) {
  join(group, topic, member);
  Topic& t = topic_ref(topic);
  Group& g = group_ref(group, topic);
  const auto deadline = std::chrono::steady_clock::now() + timeout;
  std::vector<Message> batch;
  for (;;) {
    std::uint64_t gen;
    {
      std::lock_guard lock(signal_mutex_);
      gen = generation_;
    }
    {
      std::lock_guard lock(g.mu);
      auto it = std::find(g.members.begin(), g.members.end(), member);
      if (it == g.members.end()) return batch;  // left concurrently
      const auto rank = static_cast<std::size_t>(it - g.members.begin());
      const std::size_t n = t.parts.size();
      const std::size_t members = g.members.size();
      for (std::size_t step = 0; step < n && batch.size() < max_messages; ++step) {
        const std::size_t p = (g.cursor + step) % n;
        if (p % members != rank) continue;
        const Partition& part = *t.parts[p];
        std::lock_guard plock(part.mu);
        auto& pos = g.position[p];
        while (pos < static_cast<std::int64_t>(part.log.size()) && batch.size() < max_messages) {
          const auto& rec = part.log[static_cast<std::size_t>(pos)];
          batch.push_back({topic, static_cast<int>(p), pos, rec.key, rec.payload});
          ++pos;
        }
      }
      g.cursor = (g.cursor + 1) % n;
    }
    if (!batch.empty() || max_messages == 0) return batch;
    std::unique_lock lock(signal_mutex_);
    if (!signal_.wait_until(lock, deadline, [&] { return generation_ != gen; })) return batch;
  }
}

void Broker::commit(const std::string& group, const std::string& topic, const OffsetMap& offsets) {
  const auto ends = end_offsets(topic);
  for (const auto& [p, o] : offsets) {
    if (p < 0 || p >= static_cast<int>(ends.size())) {
      throw BrokerError(BrokerErrc::offset_out_of_range,
                        "partition " + std::to_string(p) + " does not exist in '" + topic + "'");
    }
    if (o < 0 || o > ends[static_cast<std::size_t>(p)]) {
      throw BrokerError(BrokerErrc::offset_out_of_range,
                        "offset " + std::to_string(o) + " for partition " + std::to_string(p) +
                            " is beyond the log end " + std::to_string(ends[static_cast<std::size_t>(p)]));
    }
  }
  Group& g = group_ref(group, topic);
  {
    std::lock_guard lock(g.mu);
    for (const auto& [p, o] : offsets) g.committed[p] = o;
    persist_offsets(group, topic, g);
  }
  {
    std::lock_guard lock(signal_mutex_);
    ++generation_;
  }
  signal_.notify_all();
}

void Broker::persist_offsets(const std::string& group, const std::string& topic, const Group& g) {
  if (config_.data_dir.empty()) return;
  json offsets = json::object();
  for (const auto& [p, o] : g.committed) offsets[std::to_string(p)] = o;
  const json doc{{"group", group}, {"topic", topic}, {"offsets", offsets}};
  std::string name = group;
  name.push_back('\0');
  name += topic;
  write_file_atomic(config_.data_dir / "groups" / (to_hex(fnv1a64(name)) + ".json"), doc.dump());
}

OffsetMap Broker::committed(const std::string& group, const std::string& topic) const {
  topic_ref(topic);
  std::lock_guard lock(groups_mutex_);
  auto it = groups_.find({group, topic});
  if (it == groups_.end()) return {};
  std::lock_guard glock(it->second->mu);
  return it->second->committed;
}

// ---- in-process client ------------------------------------------------------

std::string new_member_id() {
  static std::atomic<std::uint64_t> counter{0};
  return "m" + std::to_string(::getpid()) + "-" + std::to_string(++counter);
}

InProcessClient::InProcessClient(std::shared_ptr<Broker> broker)
    : broker_(std::move(broker)), member_(new_member_id()) {}

InProcessClient::~InProcessClient() {
  for (const auto& [group, topic] : joined_) {
    try {
      broker_->leave(group, topic, member_);
    } catch (const Error&) {
    }
  }
}

int InProcessClient::create_topic(const std::string& name, int partitions, bool if_not_exists) {
  return broker_->create_topic(name, partitions, if_not_exists);
}

std::vector<std::int64_t> InProcessClient::end_offsets(const std::string& topic) {
  return broker_->end_offsets(topic);
}

ProduceResult InProcessClient::produce(const std::string& topic, const std::string& key,
                                       const std::string& payload) {
  return broker_->produce(topic, key, payload);
}

std::vector<ProduceResult> InProcessClient::produce_batch(const std::string& topic,
                                                          std::span<const KeyedPayload> messages) {
  std::vector<ProduceResult> out;
  out.reserve(messages.size());
  for (const auto& m : messages) out.push_back(broker_->produce(topic, m.key, m.payload));
  return out;
}

std::vector<Message> InProcessClient::poll(const std::string& group, const std::string& topic,
                                           std::size_t max_messages, std::chrono::milliseconds timeout) {
  {
    std::lock_guard lock(joined_mutex_);
    const std::pair<std::string, std::string> key{group, topic};
    if (std::find(joined_.begin(), joined_.end(), key) == joined_.end()) joined_.push_back(key);
  }
  return broker_->poll(group, topic, member_, max_messages, timeout);
}

void InProcessClient::commit(const std::string& group, const std::string& topic, const OffsetMap& offsets) {
  broker_->commit(group, topic, offsets);
}

OffsetMap InProcessClient::committed(const std::string& group, const std::string& topic) {
  return broker_->committed(group, topic);
}

}  // namespace maliot
