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

#include <chrono>
#include <condition_variable>
#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <shared_mutex>
#include <span>
#include <string>
#include <vector>

#include "maliot/common.hpp"

namespace maliot {

enum class BrokerErrc {
  unknown_topic,
  topic_exists,
  bad_partition_count,
  offset_out_of_range,
  backpressure_timeout,
  protocol,
};

std::string_view to_string(BrokerErrc code);

/// Any broker-side failure. Transport failures use BrokerUnreachable instead.
class BrokerError : public NetworkError {
 public:
  BrokerError(BrokerErrc code, const std::string& what) : NetworkError(what), code_(code) {}
  BrokerErrc code() const noexcept { return code_; }

 private:
  BrokerErrc code_;
};

class BrokerUnreachable : public NetworkError {
 public:
  using NetworkError::NetworkError;
};

struct Message {
  std::string topic;
  int partition = 0;
  std::int64_t offset = 0;
  std::string key;
  std::string payload;

  bool operator==(const Message&) const = default;
};

struct KeyedPayload {
  std::string key;
  std::string payload;
};

struct ProduceResult {
  int partition = 0;
  std::int64_t offset = 0;

  bool operator==(const ProduceResult&) const = default;
};

using OffsetMap = std::map<int, std::int64_t>;

enum class FsyncPolicy { every_message, interval };

struct BrokerConfig {
  /// Empty keeps everything in memory (no durability).
  std::filesystem::path data_dir;
  /// Maximum messages a partition may hold beyond the slowest group's
  /// committed offset before producers block.
  std::size_t partition_bound = 1'000'000;
  std::chrono::milliseconds backpressure_timeout{5000};
  FsyncPolicy fsync = FsyncPolicy::interval;
  std::chrono::milliseconds fsync_interval{50};
};

/// Partition a key lands on: fnv1a64(key) mod partitions.
int partition_for_key(std::string_view key, int partitions) noexcept;

/// Partitioned append-only log with consumer groups. Thread-safe.
///
/// Group membership is explicit: a consumer joins a (group, topic) under a
/// member id and is assigned every partition p with p mod members == its
/// rank. Any membership change rewinds every fetch position of that group to
/// its committed offset, which is what gives at-least-once redelivery after a
/// consumer restart.
class Broker {
 public:
  explicit Broker(BrokerConfig config = {});
  ~Broker();
  Broker(const Broker&) = delete;
  Broker& operator=(const Broker&) = delete;

  /// Returns the partition count of the (possibly pre-existing) topic.
  int create_topic(const std::string& name, int partitions, bool if_not_exists = false);
  bool has_topic(const std::string& name) const;
  int partition_count(const std::string& topic) const;
  std::vector<std::int64_t> end_offsets(const std::string& topic) const;

  ProduceResult produce(const std::string& topic, std::string key, std::string payload);

  void join(const std::string& group, const std::string& topic, const std::string& member);
  void leave(const std::string& group, const std::string& topic, const std::string& member);
  /// Partitions currently assigned to `member` (joins it if needed).
  std::vector<int> assignment(const std::string& group, const std::string& topic,
                              const std::string& member);

  /// Up to max_messages from the member's partitions, waiting at most
  /// `timeout` for the first message. Does not commit.
  std::vector<Message> poll(const std::string& group, const std::string& topic,
                            const std::string& member, std::size_t max_messages,
                            std::chrono::milliseconds timeout);

  void commit(const std::string& group, const std::string& topic, const OffsetMap& offsets);
  OffsetMap committed(const std::string& group, const std::string& topic) const;

  /// Forces buffered log data to stable storage.
  void sync();

  const BrokerConfig& config() const noexcept { return config_; }

 private:
  struct Partition;
  struct Topic;
  struct Group;

  Topic& topic_ref(const std::string& name) const;
  Group& group_ref(const std::string& group, const std::string& topic);
  void rebalance(Group& g);
  void persist_offsets(const std::string& group, const std::string& topic, const Group& g);
  void recover();
  std::int64_t min_committed(const std::string& topic, int partition) const;

  BrokerConfig config_;
  mutable std::shared_mutex topics_mutex_;
  std::map<std::string, std::unique_ptr<Topic>> topics_;

  mutable std::mutex groups_mutex_;
  std::map<std::pair<std::string, std::string>, std::unique_ptr<Group>> groups_;

  // Signalled on every append and commit.
  mutable std::mutex signal_mutex_;
  std::condition_variable signal_;
  std::uint64_t generation_ = 0;
};

/// Uniform client view over the broker. One client object is one consumer
/// group member; destroying it leaves every group it joined.
class BrokerClient {
 public:
  virtual ~BrokerClient() = default;

  virtual int create_topic(const std::string& name, int partitions, bool if_not_exists) = 0;
  /// Partition count and next offset of each partition.
  virtual std::vector<std::int64_t> end_offsets(const std::string& topic) = 0;
  virtual ProduceResult produce(const std::string& topic, const std::string& key,
                                const std::string& payload) = 0;
  virtual std::vector<ProduceResult> produce_batch(const std::string& topic,
                                                   std::span<const KeyedPayload> messages) = 0;
  virtual std::vector<Message> poll(const std::string& group, const std::string& topic,
                                    std::size_t max_messages, std::chrono::milliseconds timeout) = 0;
  virtual void commit(const std::string& group, const std::string& topic, const OffsetMap& offsets) = 0;
  virtual OffsetMap committed(const std::string& group, const std::string& topic) = 0;
};

class InProcessClient final : public BrokerClient {
 public:
  explicit InProcessClient(std::shared_ptr<Broker> broker);
  ~InProcessClient() override;

  int create_topic(const std::string& name, int partitions, bool if_not_exists) override;
  std::vector<std::int64_t> end_offsets(const std::string& topic) override;
  ProduceResult produce(const std::string& topic, const std::string& key,
                        const std::string& payload) override;
  std::vector<ProduceResult> produce_batch(const std::string& topic,
                                           std::span<const KeyedPayload> messages) override;
  std::vector<Message> poll(const std::string& group, const std::string& topic, std::size_t max_messages,
                            std::chrono::milliseconds timeout) override;
  void commit(const std::string& group, const std::string& topic, const OffsetMap& offsets) override;
  OffsetMap committed(const std::string& group, const std::string& topic) override;

  const std::string& member_id() const noexcept { return member_; }

 private:
  std::shared_ptr<Broker> broker_;
  std::string member_;
  std::mutex joined_mutex_;
  std::vector<std::pair<std::string, std::string>> joined_;
};

/// Globally unique member id for this process ("m<pid>-<counter>").
std::string new_member_id();

/// "host:port" → TCP client; "inproc" is rejected here (callers own the broker).
std::unique_ptr<BrokerClient> connect_broker(const std::string& address,
                                             std::chrono::milliseconds connect_timeout = std::chrono::seconds(5));

}  // namespace maliot
