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
#include <list>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <thread>

#include "maliot/broker.hpp"

namespace maliot {

/// Frame layout: 4-byte big-endian body length, 1-byte opcode, UTF-8 JSON
/// body. The length counts the body only.
enum class Opcode : std::uint8_t { create = 1, produce = 2, poll = 3, commit = 4, ack = 5, err = 6 };

inline constexpr std::size_t kFrameHeaderBytes = 5;
inline constexpr std::size_t kMaxFrameBody = 64u << 20;

struct Frame {
  Opcode opcode = Opcode::ack;
  std::string body;

  bool operator==(const Frame&) const = default;
};

std::string encode_frame(const Frame& frame);
/// Decodes one frame from the front of `bytes`; nullopt when incomplete.
/// `consumed` receives the number of bytes used. Throws BrokerError(protocol)
/// on an invalid opcode or oversized length.
std::optional<Frame> decode_frame(std::string_view bytes, std::size_t& consumed);

void send_frame(int fd, const Frame& frame);
/// nullopt on orderly close before any byte of a frame.
std::optional<Frame> recv_frame(int fd);

struct HostPort {
  std::string host;
  std::uint16_t port = 0;
};
/// "host:port" (host may be empty for all interfaces when listening).
HostPort parse_host_port(const std::string& address);

/// Serves a Broker over TCP, one thread per connection. Each connection is
/// one consumer-group member; closing it leaves the groups it joined.
class TcpBrokerServer {
 public:
  TcpBrokerServer(std::shared_ptr<Broker> broker, const std::string& host = "127.0.0.1",
                  std::uint16_t port = 0);
  ~TcpBrokerServer();
  TcpBrokerServer(const TcpBrokerServer&) = delete;
  TcpBrokerServer& operator=(const TcpBrokerServer&) = delete;

  std::uint16_t port() const noexcept { return port_; }
  std::string address() const;
  void stop();

 private:
  struct Connection {
    int fd = -1;
    std::thread thread;
    std::atomic<bool> done{false};
  };

  void accept_loop();
  void serve(Connection& conn);
  void reap();

  std::shared_ptr<Broker> broker_;
  std::string host_;
  int listen_fd_ = -1;
  std::uint16_t port_ = 0;
  std::atomic<bool> stopping_{false};
  std::thread acceptor_;
  std::mutex conns_mutex_;
  std::list<Connection> conns_;
};

class TcpClient final : public BrokerClient {
 public:
  TcpClient(const std::string& address, std::chrono::milliseconds connect_timeout);
  ~TcpClient() override;

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

 private:
  std::string request(Opcode op, const std::string& body);

  std::mutex mutex_;
  int fd_ = -1;
  std::string address_;
};

}  // namespace maliot
