// Copyright 2026 The metasolve Authors
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Error type, deterministic RNG and seed derivation shared by every
// module.

#pragma once

#include <chrono>
#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>
#include <string_view>

namespace metasolve {

/// Machine-readable error codes. The names double as the `code` field of
/// HTTP error bodies, so keep them stable.
enum class Errc {
  InvalidArgument,
  UnknownProblemType,
  ParseError,
  UnsupportedEdgeWeightType,
  HeaderMismatch,
  IndexOutOfRange,
  IllegalTransition,
  IllegalState,
  UnknownStrategy,
  CyclicStrategyReference,
  InvalidPath,
  NotEuclidean,
  Infeasible,
  MissingSubResult,
  CoverageViolation,
  TooLarge,
  TooLargeForEncoding,
  TooManyQubits,
  DimensionMismatch,
  SelfLoop,
  BinaryNotFound,
  SubprocessFailure,
  OutputParseError,
  TypeMismatch,
  NoCompatibleBackend,
  NotFound,
  Cancelled,
};

inline std::string_view errc_name(Errc code) {
  switch (code) {
    case Errc::InvalidArgument: return "InvalidArgument";
    case Errc::UnknownProblemType: return "UnknownProblemType";
    case Errc::ParseError: return "ParseError";
    case Errc::UnsupportedEdgeWeightType: return "UnsupportedEdgeWeightType";
    case Errc::HeaderMismatch: return "HeaderMismatch";
    case Errc::IndexOutOfRange: return "IndexOutOfRange";
    case Errc::IllegalTransition: return "IllegalTransition";
    case Errc::IllegalState: return "IllegalState";
    case Errc::UnknownStrategy: return "UnknownStrategy";
    case Errc::CyclicStrategyReference: return "CyclicStrategyReference";
    case Errc::InvalidPath: return "InvalidPath";
    case Errc::NotEuclidean: return "NotEuclidean";
    case Errc::Infeasible: return "Infeasible";
    case Errc::MissingSubResult: return "MissingSubResult";
    case Errc::CoverageViolation: return "CoverageViolation";
    case Errc::TooLarge: return "TooLarge";
    case Errc::TooLargeForEncoding: return "TooLargeForEncoding";
    case Errc::TooManyQubits: return "TooManyQubits";
    case Errc::DimensionMismatch: return "DimensionMismatch";
    case Errc::SelfLoop: return "SelfLoop";
    case Errc::BinaryNotFound: return "BinaryNotFound";
    case Errc::SubprocessFailure: return "SubprocessFailure";
    case Errc::OutputParseError: return "OutputParseError";
    case Errc::TypeMismatch: return "TypeMismatch";
    case Errc::NoCompatibleBackend: return "NoCompatibleBackend";
    case Errc::NotFound: return "NotFound";
    case Errc::Cancelled: return "Cancelled";
  }
  return "Unknown";
}

/// The single exception type thrown by the library. `line` is 1-based and
/// only meaningful for parse errors (0 otherwise).
class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& message, int line = 0)
      : std::runtime_error(format(code, message, line)),
        code_(code),
        line_(line),
        detail_(message) {}

  Errc code() const noexcept { return code_; }
  int line() const noexcept { return line_; }
  const std::string& detail() const noexcept { return detail_; }

 private:
  static std::string format(Errc code, const std::string& message, int line) {
    std::string out(errc_name(code));
    if (line > 0) out += " (line " + std::to_string(line) + ")";
    if (!message.empty()) out += ": " + message;
    return out;
  }

  Errc code_;
  int line_;
  std::string detail_;
};

// ---------------------------------------------------------------------------
// Randomness
// ---------------------------------------------------------------------------

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

inline std::uint64_t fnv1a(std::string_view s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

/// child seed = hash(parent seed, step key, child index, trial)
inline std::uint64_t derive_seed(std::uint64_t parent, std::string_view step,
                                 std::uint64_t child_index,
                                 std::uint64_t trial) {
  std::uint64_t h = splitmix64(parent);
  h = splitmix64(h ^ fnv1a(step));
  h = splitmix64(h ^ (child_index * 0x632be59bd9b4e019ULL));
  return splitmix64(h ^ (trial + 0x51ed2701ULL));
}

/// mt19937_64 with distribution helpers whose output does not depend on the
/// standard library implementation (std distributions are unspecified).
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next() { return engine_(); }

  /// Uniform in [0, 1).
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  /// Uniform integer in [0, n). n must be positive.
  std::uint64_t below(std::uint64_t n) {
    const std::uint64_t limit = ~std::uint64_t{0} - (~std::uint64_t{0} % n);
    std::uint64_t x = engine_();
    while (x >= limit) x = engine_();
    return x % n;
  }

  bool coin() { return (engine_() >> 63) != 0; }

 private:
  std::mt19937_64 engine_;
};

class Stopwatch {
 public:
  Stopwatch() : start_(std::chrono::steady_clock::now()) {}
  std::int64_t elapsed_ms() const {
    return std::chrono::duration_cast<std::chrono::milliseconds>(
               std::chrono::steady_clock::now() - start_)
        .count();
  }
  double elapsed_seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() -
                                         start_)
        .count();
  }

 private:
  std::chrono::steady_clock::time_point start_;
};

}  // namespace metasolve
