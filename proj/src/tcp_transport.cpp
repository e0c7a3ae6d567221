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


#include <arpa/inet.h>
#include <netdb.h>
#include <netinet/in.h>
#include <netinet/tcp.h>
#include <poll.h>
#include <sys/socket.h>
#include <unistd.h>

#include <algorithm>
#include <cstring>

#include "json.hpp"
#include "maliot/wire.hpp"

namespace maliot {
namespace {

using json = nlohmann::json;

BrokerErrc errc_from_string(std::string_view s) {
  for (auto c : {BrokerErrc::unknown_topic, BrokerErrc::topic_exists, BrokerErrc::bad_partition_count,
                 BrokerErrc::offset_out_of_range, BrokerErrc::backpressure_timeout}) {
    if (s == to_string(c)) return c;
  }
  return BrokerErrc::protocol;
}

json offsets_json(const OffsetMap& offsets) {
  json j = json::object();
  for (const auto& [p, o] : offsets) j[std::to_string(p)] = o;
  return j;
}

OffsetMap json_offsets(const json& j) {
  OffsetMap out;
  for (auto it = j.begin(); it != j.end(); ++it) out[std::stoi(it.key())] = it.value().get<std::int64_t>();
  return out;
}

void set_nodelay(int fd) {
  int one = 1;
  ::setsockopt(fd, IPPROTO_TCP, TCP_NODELAY, &one, sizeof(one));
}

}  // namespace

// ---- server -------------------------------------------------------------------

TcpBrokerServer::TcpBrokerServer(std::shared_ptr<Broker> broker, const std::string& host, std::uint16_t port)
    : broker_(std::move(broker)), host_(host.empty() ? "0.0.0.0" : host) {
  addrinfo hints{};
  hints.ai_family = AF_UNSPEC;
  hints.ai_socktype = SOCK_STREAM;
  hints.ai_flags = AI_PASSIVE | AI_NUMERICSERV;
  addrinfo* res = nullptr;
  const std::string service = std::to_string(port);
  if (const int rc = ::getaddrinfo(host_.c_str(), service.c_str(), &hints, &res); rc != 0) {
    throw ConfigError("cannot resolve listen address '" + host_ + "': " + gai_strerror(rc));
  }
  int fd = -1;
  std::string last_error = "no usable address";
  for (addrinfo* ai = res; ai; ai = ai->ai_next) {
    fd = ::socket(ai->ai_family, ai->ai_socktype | SOCK_CLOEXEC, ai->ai_protocol);
    if (fd < 0) continue;
    int one = 1;
    ::setsockopt(fd, SOL_SOCKET, SO_REUSEADDR, &one, sizeof(one));
    if (::bind(fd, ai->ai_addr, ai->ai_addrlen) == 0 && ::listen(fd, 64) == 0) break;
    last_error = std::strerror(errno);
    ::close(fd);
    fd = -1;
  }
  ::freeaddrinfo(res);
  if (fd < 0) throw NetworkError("cannot listen on " + host_ + ":" + service + ": " + last_error);
  listen_fd_ = fd;
  sockaddr_storage addr{};
  socklen_t len = sizeof(addr);
  ::getsockname(fd, reinterpret_cast<sockaddr*>(&addr), &len);
  port_ = addr.ss_family == AF_INET6 ? ntohs(reinterpret_cast<sockaddr_in6*>(&addr)->sin6_port)
                                     : ntohs(reinterpret_cast<sockaddr_in*>(&addr)->sin_port);
  acceptor_ = std::thread([this] { accept_loop(); });
}

TcpBrokerServer::~TcpBrokerServer() { stop(); }

std::string TcpBrokerServer::address() const {
  const std::string host = host_ == "0.0.0.0" ? "127.0.0.1" : host_;
  return (host.find(':') != std::string::npos ? "[" + host + "]" : host) + ":" + std::to_string(port_);
}

void TcpBrokerServer::stop() {
  if (stopping_.exchange(true)) return;
  if (acceptor_.joinable()) acceptor_.join();
  ::close(listen_fd_);
  std::lock_guard lock(conns_mutex_);
  for (auto& c : conns_) ::shutdown(c.fd, SHUT_RDWR);
  for (auto& c : conns_) {
    if (c.thread.joinable()) c.thread.join();
    ::close(c.fd);
  }
  conns_.clear();
}

void TcpBrokerServer::reap() {
  std::lock_guard lock(conns_mutex_);
  for (auto it = conns_.begin(); it != conns_.end();) {
    if (it->done.load()) {
      it->thread.join();
      ::close(it->fd);
      it = conns_.erase(it);
    } else {
      ++it;
    }
  }
}

void TcpBrokerServer::accept_loop() {
  while (!stopping_.load()) {
    pollfd pfd{listen_fd_, POLLIN, 0};
    const int rc = ::poll(&pfd, 1, 100);
    reap();
    if (rc <= 0) continue;
    const int fd = ::accept4(listen_fd_, nullptr, nullptr, SOCK_CLOEXEC);
    if (fd < 0) continue;
    set_nodelay(fd);
    std::lock_guard lock(conns_mutex_);
    auto& conn = conns_.emplace_back();
    conn.fd = fd;
    conn.thread = std::thread([this, &conn] { serve(conn); });
  }
}

void TcpBrokerServer::serve(Connection& conn) {
  const std::string member = new_member_id();
  std::vector<std::pair<std::string, std::string>> joined;
  try {
    while (auto frame = recv_frame(conn.fd)) {
      Frame reply{Opcode::ack, {}};
      try {
        const json req = json::parse(frame->body);
        json out;
        switch (frame->opcode) {
          case Opcode::create: {
            const auto topic = req.at("topic").get<std::string>();
            if (!req.value("describe", false)) {
              broker_->create_topic(topic, req.at("partitions").get<int>(), req.value("if_not_exists", false));
            }
            const auto ends = broker_->end_offsets(topic);
            out = {{"partitions", ends.size()}, {"end_offsets", ends}};
            break;
          }
          case Opcode::produce: {
            const auto topic = req.at("topic").get<std::string>();
            if (req.contains("messages")) {
              json results = json::array();
              for (const auto& m : req.at("messages")) {
                const auto r = broker_->produce(topic, m.at("key").get<std::string>(),
                                                m.at("payload").get<std::string>());
                results.push_back({r.partition, r.offset});
              }
              out = {{"results", results}};
            } else {
              const auto r = broker_->produce(topic, req.at("key").get<std::string>(),
                                              req.at("payload").get<std::string>());
              out = {{"partition", r.partition}, {"offset", r.offset}};
            }
            break;
          }
          case Opcode::poll: {
            const auto group = req.at("group").get<std::string>();
            const auto topic = req.at("topic").get<std::string>();
            const std::pair<std::string, std::string> key{group, topic};
            if (std::find(joined.begin(), joined.end(), key) == joined.end()) joined.push_back(key);
            const auto batch =
                broker_->poll(group, topic, member, req.at("max").get<std::size_t>(),
                              std::chrono::milliseconds(req.value("timeout_ms", std::int64_t{0})));
            json msgs = json::array();
            for (const auto& m : batch) {
              msgs.push_back({{"partition", m.partition}, {"offset", m.offset}, {"key", m.key}, {"payload", m.payload}});
            }
            out = {{"messages", msgs}};
            break;
          }
          case Opcode::commit: {
            const auto group = req.at("group").get<std::string>();
            const auto topic = req.at("topic").get<std::string>();
            const auto offsets = json_offsets(req.at("offsets"));
            if (!offsets.empty()) broker_->commit(group, topic, offsets);
            out = {{"committed", offsets_json(broker_->committed(group, topic))}};
            break;
          }
          default:
            throw BrokerError(BrokerErrc::protocol, "unexpected opcode from client");
        }
        reply.body = out.dump();
      } catch (const BrokerError& e) {
        reply = {Opcode::err, json{{"code", to_string(e.code())}, {"message", e.what()}}.dump()};
      } catch (const json::exception& e) {
        reply = {Opcode::err, json{{"code", "ProtocolError"}, {"message", e.what()}}.dump()};
      } catch (const ConfigError& e) {
        reply = {Opcode::err, json{{"code", "BadConfig"}, {"message", e.what()}}.dump()};
      } catch (const Error& e) {
        reply = {Opcode::err, json{{"code", "Internal"}, {"message", e.what()}}.dump()};
      }
      send_frame(conn.fd, reply);
    }
  } catch (const Error&) {
    // Connection dropped or sent garbage; either way this member is gone.
  }
  for (const auto& [group, topic] : joined) {
    try {
      broker_->leave(group, topic, member);
    } catch (const Error&) {
    }
  }
  conn.done.store(true);
}

// ---- client -------------------------------------------------------------------

TcpClient::TcpClient(const std::string& address, std::chrono::milliseconds connect_timeout)
    : address_(address) {
  const HostPort hp = parse_host_port(address);
  const auto deadline = std::chrono::steady_clock::now() + connect_timeout;
  std::string last_error;
  for (;;) {
    addrinfo hints{};
    hints.ai_family = AF_UNSPEC;
    hints.ai_socktype = SOCK_STREAM;
    hints.ai_flags = AI_NUMERICSERV;
    addrinfo* res = nullptr;
    const std::string service = std::to_string(hp.port);
    const std::string host = hp.host.empty() ? "127.0.0.1" : hp.host;
    if (const int rc = ::getaddrinfo(host.c_str(), service.c_str(), &hints, &res); rc == 0) {
      for (addrinfo* ai = res; ai && fd_ < 0; ai = ai->ai_next) {
        const int fd = ::socket(ai->ai_family, ai->ai_socktype | SOCK_CLOEXEC, ai->ai_protocol);
        if (fd < 0) continue;
        if (::connect(fd, ai->ai_addr, ai->ai_addrlen) == 0) {
          fd_ = fd;
        } else {
          last_error = std::strerror(errno);
          ::close(fd);
        }
      }
      ::freeaddrinfo(res);
    } else {
      last_error = gai_strerror(rc);
    }
    if (fd_ >= 0) break;
    if (std::chrono::steady_clock::now() >= deadline) {
      throw BrokerUnreachable("cannot connect to broker at " + address + ": " + last_error);
    }
    std::this_thread::sleep_for(std::chrono::milliseconds(50));
  }
  set_nodelay(fd_);
}

TcpClient::~TcpClient() {
  if (fd_ >= 0) ::close(fd_);
}

std::string TcpClient::request(Opcode op, const std::string& body) {
  std::lock_guard lock(mutex_);
  send_frame(fd_, {op, body});
  auto reply = recv_frame(fd_);
  if (!reply) throw BrokerUnreachable("broker at " + address_ + " closed the connection");
  if (reply->opcode == Opcode::err) {
    json err;
    try {
      err = json::parse(reply->body);
    } catch (const json::exception&) {
      throw BrokerError(BrokerErrc::protocol, "malformed error frame");
    }
    const auto code = err.value("code", std::string("ProtocolError"));
    const auto message = err.value("message", std::string());
    if (code == "BadConfig") throw ConfigError(message);
    throw BrokerError(errc_from_string(code), message);
  }
  if (reply->opcode != Opcode::ack) throw BrokerError(BrokerErrc::protocol, "unexpected reply opcode");
  return std::move(reply->body);
}

int TcpClient::create_topic(const std::string& name, int partitions, bool if_not_exists) {
  const auto r = json::parse(request(
      Opcode::create, json{{"topic", name}, {"partitions", partitions}, {"if_not_exists", if_not_exists}}.dump()));
  return r.at("partitions").get<int>();
}

std::vector<std::int64_t> TcpClient::end_offsets(const std::string& topic) {
  const auto r = json::parse(request(Opcode::create, json{{"topic", topic}, {"describe", true}}.dump()));
  return r.at("end_offsets").get<std::vector<std::int64_t>>();
}

ProduceResult TcpClient::produce(const std::string& topic, const std::string& key, const std::string& payload) {
  const auto r =
      json::parse(request(Opcode::produce, json{{"topic", topic}, {"key", key}, {"payload", payload}}.dump()));
  return {r.at("partition").get<int>(), r.at("offset").get<std::int64_t>()};
}

std::vector<ProduceResult> TcpClient::produce_batch(const std::string& topic,
                                                    std::span<const KeyedPayload> messages) {
  json msgs = json::array();
  for (const auto& m : messages) msgs.push_back({{"key", m.key}, {"payload", m.payload}});
  const auto r = json::parse(request(Opcode::produce, json{{"topic", topic}, {"messages", msgs}}.dump()));
  std::vector<ProduceResult> out;
  for (const auto& pr : r.at("results")) out.push_back({pr.at(0).get<int>(), pr.at(1).get<std::int64_t>()});
  return out;
}

std::vector<Message> TcpClient::poll(const std::string& group, const std::string& topic, std::size_t max_messages,
                                     std::chrono::milliseconds timeout) {
  const auto r = json::parse(request(
      Opcode::poll,
      json{{"group", group}, {"topic", topic}, {"max", max_messages}, {"timeout_ms", timeout.count()}}.dump()));
  std::vector<Message> out;
  for (const auto& m : r.at("messages")) {
    out.push_back({topic, m.at("partition").get<int>(), m.at("offset").get<std::int64_t>(),
                   m.at("key").get<std::string>(), m.at("payload").get<std::string>()});
  }
  return out;
}

void TcpClient::commit(const std::string& group, const std::string& topic, const OffsetMap& offsets) {
  request(Opcode::commit, json{{"group", group}, {"topic", topic}, {"offsets", offsets_json(offsets)}}.dump());
}

OffsetMap TcpClient::committed(const std::string& group, const std::string& topic) {
  const auto r = json::parse(
      request(Opcode::commit, json{{"group", group}, {"topic", topic}, {"offsets", json::object()}}.dump()));
  return json_offsets(r.at("committed"));
}

std::unique_ptr<BrokerClient> connect_broker(const std::string& address, std::chrono::milliseconds connect_timeout) {
  return std::make_unique<TcpClient>(address, connect_timeout);
}

}  // namespace maliot
