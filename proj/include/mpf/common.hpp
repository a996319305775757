#pragma once

#include <cstdint>
#include <cstdio>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>

namespace mpf {

// Error taxonomy: everything thrown by the library derives from Error so the
// CLI can report one way. Shape/Numeric carry structured what() strings that
// name the offending operation and shapes/values.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ShapeError : public Error {
 public:
  using Error::Error;
};

class NumericError : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

// Deterministic RNG. mt19937_64 output is fully specified by the standard;
// we layer our own uniform/normal transforms on top because std::*_distribution
// is implementation-defined and would break bit-reproducibility of artifacts
// across standard libraries.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next_u64() { return engine_(); }

  // Uniform in [0, 1) with 53 random bits.
  double uniform() {
    return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
  }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // Uniform index in [0, n). n must be > 0.
  std::size_t index(std::size_t n) {
    std::size_t i = static_cast<std::size_t>(uniform() * static_cast<double>(n));
    return i < n ? i : n - 1;
  }

  // Standard normal via Box-Muller (cosine branch). Consumes exactly two
  // uniforms per call; no cached state, so call order alone determines output.
  double normal();

  void fill_normal(std::span<double> out) {
    for (double& v : out) v = normal();
  }

 private:
  std::mt19937_64 engine_;
};

// Stable hash used for seed derivation and manifest content hashes.
std::uint64_t fnv1a64(const void* data, std::size_t len);
std::uint64_t fnv1a64(std::string_view s);

// Derives a phase/task seed from a global seed and a tag. Staged subcommand
// runs and the monolithic pipeline must agree on RNG streams, so every phase
// re-derives its seed from (config seed, tag) instead of sharing an engine.
std::uint64_t mix_seed(std::uint64_t seed, std::string_view tag);

enum class LogLevel { kError = 0, kInfo = 1, kDebug = 2 };

// Parsed once from MPF_LOG (error|info|debug), default info.
LogLevel log_level();

void log_error(const std::string& msg);
void log_info(const std::string& msg);
void log_debug(const std::string& msg);

}  // namespace mpf
