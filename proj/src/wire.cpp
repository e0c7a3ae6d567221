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


#include "maliot/wire.hpp"

#include <sys/socket.h>
#include <unistd.h>

#include <cerrno>
#include <charconv>
#include <cstring>

namespace maliot {

std::string encode_frame(const Frame& frame) {
  if (frame.body.size() > kMaxFrameBody) throw BrokerError(BrokerErrc::protocol, "frame body too large");
  const auto n = static_cast<std::uint32_t>(frame.body.size());
  std::string out;
  out.reserve(kFrameHeaderBytes + frame.body.size());
  out.push_back(static_cast<char>((n >> 24) & 0xff));
  out.push_back(static_cast<char>((n >> 16) & 0xff));
  out.push_back(static_cast<char>((n >> 8) & 0xff));
  out.push_back(static_cast<char>(n & 0xff));
  out.push_back(static_cast<char>(frame.opcode));
  out += frame.body;
  return out;
}

namespace {

std::uint32_t read_be32(const char* p) {
  return (static_cast<std::uint32_t>(static_cast<unsigned char>(p[0])) << 24) |
         (static_cast<std::uint32_t>(static_cast<unsigned char>(p[1])) << 16) |
         (static_cast<std::uint32_t>(static_cast<unsigned char>(p[2])) << 8) |
         static_cast<std::uint32_t>(static_cast<unsigned char>(p[3]));
}

Opcode checked_opcode(char c) {
  const auto v = static_cast<unsigned char>(c);
  if (v < 1 || v > 6) throw BrokerError(BrokerErrc::protocol, "unknown opcode " + std::to_string(v));
  return static_cast<Opcode>(v);
}

// Reads exactly n bytes. Returns false on EOF before the first byte.
bool read_exact(int fd, char* out, std::size_t n, bool eof_ok) {
  std::size_t got = 0;
  while (got < n) {
    const ssize_t r = ::recv(fd, out + got, n - got, 0);
    if (r == 0) {
      if (got == 0 && eof_ok) return false;
      throw BrokerUnreachable("connection closed mid-frame");
    }
    if (r < 0) {
      if (errno == EINTR) continue;
      throw BrokerUnreachable(std::string("socket read failed: ") + std::strerror(errno));
    }
    got += static_cast<std::size_t>(r);
  }
  return true;
}

}  // namespace

std::optional<Frame> decode_frame(std::string_view bytes, std::size_t& consumed) {
  consumed = 0;
  if (bytes.size() < kFrameHeaderBytes) return std::nullopt;
  const std::uint32_t n = read_be32(bytes.data());
  if (n > kMaxFrameBody) throw BrokerError(BrokerErrc::protocol, "frame length " + std::to_string(n) + " too large");
  const Opcode op = checked_opcode(bytes[4]);
  if (bytes.size() < kFrameHeaderBytes + n) return std::nullopt;
  consumed = kFrameHeaderBytes + n;
  return Frame{op, std::string(bytes.substr(kFrameHeaderBytes, n))};
}

void send_frame(int fd, const Frame& frame) {
  const std::string bytes = encode_frame(frame);
  std::size_t sent = 0;
  while (sent < bytes.size()) {
    const ssize_t r = ::send(fd, bytes.data() + sent, bytes.size() - sent, MSG_NOSIGNAL);
    if (r < 0) {
      if (errno == EINTR) continue;
      throw BrokerUnreachable(std::string("socket write failed: ") + std::strerror(errno));
    }
    sent += static_cast<std::size_t>(r);
  }
}

std::optional<Frame> recv_frame(int fd) {
  char header[kFrameHeaderBytes];
  if (!read_exact(fd, header, kFrameHeaderBytes, true)) return std::nullopt;
  const std::uint32_t n = read_be32(header);
  if (n > kMaxFrameBody) throw BrokerError(BrokerErrc::protocol, "frame length " + std::to_string(n) + " too large");
  Frame f{checked_opcode(header[4]), std::string(n, '\0')};
  if (n > 0) read_exact(fd, f.body.data(), n, false);
  return f;
}

HostPort parse_host_port(const std::string& address) {
  const auto colon = address.rfind(':');
  if (colon == std::string::npos) throw ConfigError("broker address must be host:port, got '" + address + "'");
  HostPort hp;
  hp.host = address.substr(0, colon);
  if (hp.host.size() >= 2 && hp.host.front() == '[' && hp.host.back() == ']') {
    hp.host = hp.host.substr(1, hp.host.size() - 2);
  }
  const std::string port = address.substr(colon + 1);
  unsigned value = 0;
  const auto [ptr, ec] = std::from_chars(port.data(), port.data() + port.size(), value);
  if (ec != std::errc() || ptr != port.data() + port.size() || value > 65535) {
    throw ConfigError("invalid port in broker address '" + address + "'");
  }
  hp.port = static_cast<std::uint16_t>(value);
  return hp;
}

}  // namespace maliot
