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


#include <netdb.h>
#include <sys/socket.h>
#include <unistd.h>

#include <cstdio>
#include <fstream>
#include <iostream>

#include "json.hpp"
#include "maliot/stream_engine.hpp"
#include "maliot/wire.hpp"

namespace maliot {
namespace {

using json = nlohmann::json;

class JsonlFileSink final : public VerdictSink {
 public:
  explicit JsonlFileSink(const std::filesystem::path& path) : path_(path), out_(path, std::ios::app) {
    if (!out_) throw IoError("cannot open verdict file " + path.string());
  }
  void emit(std::span<const Verdict> verdicts) override {
    for (const auto& v : verdicts) out_ << verdict_to_json(v) << '\n';
  }
  void flush() override {
    out_.flush();
    if (!out_) throw IoError("write failed for " + path_.string());
  }

 private:
  std::filesystem::path path_;
  std::ofstream out_;
};

class StdoutSink final : public VerdictSink {
 public:
  void emit(std::span<const Verdict> verdicts) override {
    for (const auto& v : verdicts) std::cout << verdict_to_json(v) << '\n';
  }
  void flush() override { std::cout.flush(); }
};

class TcpLineSink final : public VerdictSink {
 public:
  explicit TcpLineSink(const std::string& address) { connect_to(parse_host_port(address), address); }
  ~TcpLineSink() override {
    if (fd_ >= 0) ::close(fd_);
  }
  void emit(std::span<const Verdict> verdicts) override {
    for (const auto& v : verdicts) {
      buffer_ += verdict_to_json(v);
      buffer_ += '\n';
    }
  }
  void flush() override {
    std::size_t sent = 0;
    while (sent < buffer_.size()) {
      const ssize_t r = ::send(fd_, buffer_.data() + sent, buffer_.size() - sent, MSG_NOSIGNAL);
      if (r < 0) {
        if (errno == EINTR) continue;
        throw NetworkError("verdict sink connection failed");
      }
      sent += static_cast<std::size_t>(r);
    }
    buffer_.clear();
  }

 private:
  void connect_to(const HostPort& hp, const std::string& address);

  int fd_ = -1;
  std::string buffer_;
};

void TcpLineSink::connect_to(const HostPort& hp, const std::string& address) {
  addrinfo hints{};
  hints.ai_family = AF_UNSPEC;
  hints.ai_socktype = SOCK_STREAM;
  hints.ai_flags = AI_NUMERICSERV;
  addrinfo* res = nullptr;
  const std::string service = std::to_string(hp.port);
  const std::string host = hp.host.empty() ? "127.0.0.1" : hp.host;
  if (::getaddrinfo(host.c_str(), service.c_str(), &hints, &res) != 0) {
    throw NetworkError("cannot resolve verdict sink " + address);
  }
  for (addrinfo* ai = res; ai && fd_ < 0; ai = ai->ai_next) {
    const int fd = ::socket(ai->ai_family, ai->ai_socktype | SOCK_CLOEXEC, ai->ai_protocol);
    if (fd < 0) continue;
    if (::connect(fd, ai->ai_addr, ai->ai_addrlen) == 0) {
      fd_ = fd;
    } else {
      ::close(fd);
    }
  }
  ::freeaddrinfo(res);
  if (fd_ < 0) throw NetworkError("cannot connect to verdict sink " + address);
}

}  // namespace

std::string verdict_to_json(const Verdict& v) {
  return json{{"topic", v.topic},
              {"partition", v.partition},
              {"offset", v.offset},
              {"device_id", v.device_id},
              {"ts", v.ts},
              {"label", to_string(v.label)},
              {"score", v.score},
              {"model_kind", to_string(v.model_kind)},
              {"model_version", v.model_version},
              {"latency_us", v.latency_us}}
      .dump();
}

Verdict verdict_from_json(std::string_view line) {
  try {
    const json j = json::parse(line);
    Verdict v;
    v.topic = j.at("topic").get<std::string>();
    v.partition = j.at("partition").get<int>();
    v.offset = j.at("offset").get<std::int64_t>();
    v.device_id = j.at("device_id").get<std::string>();
    v.ts = j.at("ts").get<double>();
    const auto label = j.at("label").get<std::string>();
    if (label != "benign" && label != "anomaly") throw DataError("bad verdict label '" + label + "'");
    v.label = label == "anomaly" ? Label::anomaly : Label::benign;
    v.score = j.at("score").get<double>();
    v.model_kind = model_kind_from_string(j.at("model_kind").get<std::string>());
    v.model_version = j.at("model_version").get<std::int64_t>();
    v.latency_us = j.at("latency_us").get<std::int64_t>();
    return v;
  } catch (const json::exception& e) {
    throw DataError(std::string("malformed verdict: ") + e.what());
  }
}

SinkKind sink_kind_from_string(std::string_view text) {
  if (text == "jsonl_file" || text == "jsonl") return SinkKind::jsonl_file;
  if (text == "stdout") return SinkKind::stdout_sink;
  if (text == "tcp") return SinkKind::tcp;
  throw ConfigError("unknown sink '" + std::string(text) + "' (expected jsonl_file, stdout or tcp)");
}

std::unique_ptr<VerdictSink> make_jsonl_sink(const std::filesystem::path& path) {
  return std::make_unique<JsonlFileSink>(path);
}

std::unique_ptr<VerdictSink> make_stdout_sink() { return std::make_unique<StdoutSink>(); }

std::unique_ptr<VerdictSink> make_tcp_sink(const std::string& address) {
  return std::make_unique<TcpLineSink>(address);
}

std::unique_ptr<VerdictSink> make_sink(const EngineConfig& config) {
  switch (config.sink) {
    case SinkKind::jsonl_file: return make_jsonl_sink(config.sink_path);
    case SinkKind::stdout_sink: return make_stdout_sink();
    case SinkKind::tcp: return make_tcp_sink(config.sink_address);
  }
  throw ConfigError("unknown sink");
}

void MemorySink::emit(std::span<const Verdict> verdicts) {
  std::lock_guard lock(mutex_);
  verdicts_.insert(verdicts_.end(), verdicts.begin(), verdicts.end());
}

std::vector<Verdict> MemorySink::snapshot() const {
  std::lock_guard lock(mutex_);
  return verdicts_;
}

std::size_t MemorySink::size() const {
  std::lock_guard lock(mutex_);
  return verdicts_.size();
}

}  // namespace maliot
