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
#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>

namespace maliot {

/// Root of every error the library throws. The CLI maps the family of an
/// error (the intermediate base class) onto its exit code.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Invalid user-supplied configuration (exit code 2).
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// Data-level failure: bad rows, degenerate datasets, mismatched models (exit code 3).
class DataError : public Error {
 public:
  using Error::Error;
};

/// Filesystem failure (exit code 4).
class IoError : public Error {
 public:
  using Error::Error;
};

/// Broker connectivity failure (exit code 5).
class NetworkError : public Error {
 public:
  using Error::Error;
};

class EmptyDataset : public DataError {
 public:
  using DataError::DataError;
};

class SingleClassData : public DataError {
 public:
  using DataError::DataError;
};

class DimensionMismatch : public DataError {
 public:
  using DataError::DataError;
};

class CodecMismatch : public DataError {
 public:
  using DataError::DataError;
};

// 64-bit FNV-1a. Used wherever a hash must be stable across runs and hosts
// (partitioning, fingerprints, checksums, IP hashing).
constexpr std::uint64_t fnv1a64(std::string_view bytes,
                                std::uint64_t h = 0xcbf29ce484222325ULL) noexcept {
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

constexpr std::uint32_t fnv1a32(std::string_view bytes) noexcept {
  std::uint32_t h = 0x811c9dc5U;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x01000193U;
  }
  return h;
}

std::string to_hex(std::uint64_t value);
std::uint64_t from_hex(std::string_view text);

constexpr std::uint64_t splitmix_mix(std::uint64_t z) noexcept {
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

/// Counter-based SplitMix64 stream: the i-th draw is mix(key + i * gamma), so
/// a stream is fully described by (key, counter) and independent substreams
/// are obtained with split(). All distributions are implemented here rather
/// than with <random> so that output is identical across standard libraries.
class Rng {
 public:
  static constexpr std::uint64_t kGamma = 0x9e3779b97f4a7c15ULL;

  explicit Rng(std::uint64_t seed) noexcept : key_(splitmix_mix(seed ^ 0x6a09e667f3bcc909ULL)) {}

  std::uint64_t next() noexcept { return splitmix_mix(key_ + (++counter_) * kGamma); }

  /// Independent substream; does not advance this stream.
  Rng split(std::uint64_t stream) const noexcept {
    Rng r(0);
    r.key_ = splitmix_mix(key_ ^ splitmix_mix(stream + kGamma));
    return r;
  }

  /// Uniform on [0, 1).
  double uniform() noexcept { return static_cast<double>(next() >> 11) * 0x1.0p-53; }
  double uniform(double lo, double hi) noexcept { return lo + (hi - lo) * uniform(); }

  /// Uniform integer on [0, n). n must be > 0.
  std::uint64_t below(std::uint64_t n) noexcept;

  /// Standard normal via Box-Muller (one draw per call, no caching).
  double normal() noexcept;
  double normal(double mean, double stddev) noexcept { return mean + stddev * normal(); }
  double lognormal(double mu, double sigma) noexcept;
  bool bernoulli(double p) noexcept { return uniform() < p; }
  double exponential(double rate) noexcept;

  std::uint64_t counter() const noexcept { return counter_; }

 private:
  std::uint64_t key_;
  std::uint64_t counter_ = 0;
};

/// Fisher-Yates with Rng; portable replacement for std::shuffle.
template <class RandomIt>
void shuffle(RandomIt first, RandomIt last, Rng& rng) {
  const auto n = static_cast<std::uint64_t>(last - first);
  for (std::uint64_t i = n; i > 1; --i) {
    const auto j = rng.below(i);
    using std::swap;
    swap(first[i - 1], first[j]);
  }
}

inline std::int64_t now_us() {
  return std::chrono::duration_cast<std::chrono::microseconds>(
             std::chrono::steady_clock::now().time_since_epoch())
      .count();
}

inline double wall_clock_seconds() {
  return std::chrono::duration<double>(std::chrono::system_clock::now().time_since_epoch())
      .count();
}

/// Shortest decimal text that parses back to exactly the same double.
std::string format_double(double value);

}  // namespace maliot
