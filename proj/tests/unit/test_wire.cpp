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


#include <gtest/gtest.h>

#include <sys/socket.h>
#include <unistd.h>

#include <thread>

#include "maliot/wire.hpp"

namespace maliot {
namespace {

using namespace std::chrono_literals;

TEST(Wire, FrameLayoutIsBigEndianLengthThenOpcode) {
  const std::string bytes = encode_frame({Opcode::produce, "{}"});
  ASSERT_EQ(bytes.size(), 7u);
  EXPECT_EQ(bytes.substr(0, 4), std::string("\0\0\0\2", 4));
  EXPECT_EQ(bytes[4], 2);
  EXPECT_EQ(bytes.substr(5), "{}");
}

TEST(Wire, DecodeHandlesPartialAndConcatenatedFrames) {
  const std::string a = encode_frame({Opcode::poll, R"({"max":5})"});
  const std::string b = encode_frame({Opcode::ack, ""});
  const std::string both = a + b;
  std::size_t used = 0;
  for (std::size_t cut = 0; cut < a.size(); ++cut) {
    EXPECT_FALSE(decode_frame(std::string_view(both).substr(0, cut), used).has_value());
    EXPECT_EQ(used, 0u);
  }
  auto first = decode_frame(both, used);
  ASSERT_TRUE(first);
  EXPECT_EQ(*first, (Frame{Opcode::poll, R"({"max":5})"}));
  EXPECT_EQ(used, a.size());
  auto second = decode_frame(std::string_view(both).substr(used), used);
  ASSERT_TRUE(second);
  EXPECT_EQ(second->opcode, Opcode::ack);
  EXPECT_TRUE(second->body.empty());
}

TEST(Wire, RejectsBadOpcodeAndHugeLength) {
  std::size_t used = 0;
  EXPECT_THROW(decode_frame(std::string("\0\0\0\0\x09", 5), used), BrokerError);
  EXPECT_THROW(decode_frame(std::string("\x7f\0\0\0\x01", 5), used), BrokerError);
}

TEST(Wire, SocketPairRoundTrip) {
  int fds[2];
  ASSERT_EQ(::socketpair(AF_UNIX, SOCK_STREAM, 0, fds), 0);
  const Frame f{Opcode::commit, std::string(100000, 'x')};
  std::jthread writer([&] { send_frame(fds[0], f); });
  const auto got = recv_frame(fds[1]);
  writer.join();
  ASSERT_TRUE(got);
  EXPECT_EQ(*got, f);
  ::close(fds[0]);
  EXPECT_FALSE(recv_frame(fds[1]).has_value());
  ::close(fds[1]);
}

TEST(Wire, ParseHostPort) {
  const auto hp = parse_host_port("127.0.0.1:9092");
  EXPECT_EQ(hp.host, "127.0.0.1");
  EXPECT_EQ(hp.port, 9092);
  EXPECT_EQ(parse_host_port("[::1]:80").host, "::1");
  EXPECT_THROW(parse_host_port("localhost"), ConfigError);
  EXPECT_THROW(parse_host_port("h:99999"), ConfigError);
  EXPECT_THROW(parse_host_port("h:abc"), ConfigError);
}

class TcpBroker : public ::testing::Test {
 protected:
  void SetUp() override {
    broker_ = std::make_shared<Broker>();
    server_ = std::make_unique<TcpBrokerServer>(broker_);
  }
  std::unique_ptr<BrokerClient> client() { return connect_broker(server_->address(), 2s); }

  std::shared_ptr<Broker> broker_;
  std::unique_ptr<TcpBrokerServer> server_;
};

TEST_F(TcpBroker, ProducePollCommitOverTcp) {
  auto c = client();
  EXPECT_EQ(c->create_topic("t", 3, false), 3);
  EXPECT_EQ(c->create_topic("t", 9, true), 3);
  const auto r = c->produce("t", "dev-1", "hello");
  EXPECT_EQ(r.partition, partition_for_key("dev-1", 3));
  EXPECT_EQ(r.offset, 0);
  std::vector<KeyedPayload> batch;
  for (int i = 0; i < 10; ++i) batch.push_back({"dev-" + std::to_string(i), "p" + std::to_string(i)});
  const auto rs = c->produce_batch("t", batch);
  ASSERT_EQ(rs.size(), 10u);
  for (std::size_t i = 0; i < rs.size(); ++i) EXPECT_EQ(rs[i].partition, partition_for_key(batch[i].key, 3));

  const auto ends = c->end_offsets("t");
  EXPECT_EQ(ends[0] + ends[1] + ends[2], 11);

  std::vector<Message> all;
  while (all.size() < 11) {
    auto got = c->poll("g", "t", 4, 500ms);
    ASSERT_FALSE(got.empty());
    all.insert(all.end(), got.begin(), got.end());
  }
  OffsetMap next;
  for (const auto& m : all) next[m.partition] = std::max(next[m.partition], m.offset + 1);
  c->commit("g", "t", next);
  EXPECT_EQ(c->committed("g", "t"), next);
  EXPECT_EQ(broker_->committed("g", "t"), next);
}

TEST_F(TcpBroker, ErrorsKeepTheirCodes) {
  auto c = client();
  try {
    c->produce("missing", "k", "v");
    FAIL();
  } catch (const BrokerError& e) {
    EXPECT_EQ(e.code(), BrokerErrc::unknown_topic);
  }
  c->create_topic("t", 1, false);
  try {
    c->commit("g", "t", {{0, 5}});
    FAIL();
  } catch (const BrokerError& e) {
    EXPECT_EQ(e.code(), BrokerErrc::offset_out_of_range);
  }
  EXPECT_THROW(c->create_topic("bad/name", 1, false), ConfigError);
  // The connection survives errors.
  EXPECT_EQ(c->produce("t", "k", "v").offset, 0);
}

TEST_F(TcpBroker, DisconnectReleasesPartitions) {
  auto a = client();
  a->create_topic("t", 2, false);
  for (int i = 0; i < 20; ++i) a->produce("t", std::to_string(i), "v");
  auto b = client();
  b->poll("g", "t", 1, 10ms);
  b.reset();
  // Give the server a moment to notice the closed connection.
  std::this_thread::sleep_for(200ms);
  std::size_t total = 0;
  const auto deadline = std::chrono::steady_clock::now() + 3s;
  while (total < 20 && std::chrono::steady_clock::now() < deadline) {
    total += a->poll("g", "t", 100, 50ms).size();
  }
  EXPECT_EQ(total, 20u);
}

TEST_F(TcpBroker, StopClosesClients) {
  auto c = client();
  c->create_topic("t", 1, false);
  server_->stop();
  EXPECT_THROW(c->produce("t", "k", "v"), NetworkError);
}

TEST(TcpClientConnect, UnreachableAfterTimeout) {
  // Bind then close to find a port nobody listens on.
  auto broker = std::make_shared<Broker>();
  std::string address;
  {
    TcpBrokerServer s(broker);
    address = s.address();
  }
  const auto t0 = std::chrono::steady_clock::now();
  EXPECT_THROW(connect_broker(address, 300ms), BrokerUnreachable);
  EXPECT_GE(std::chrono::steady_clock::now() - t0, 250ms);
}

}  // namespace
}  // namespace maliot
