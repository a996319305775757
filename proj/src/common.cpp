#include "mpf/common.hpp"

#include <cmath>
#include <cstdlib>
#include <mutex>
#include <numbers>

namespace mpf {

double Rng::normal() {
  // u1 in (0, 1] so log() is finite.
  double u1 = 1.0 - uniform();
  double u2 = uniform();
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

std::uint64_t fnv1a64(const void* data, std::size_t len) {
  const auto* p = static_cast<const unsigned char*>(data);
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (std::size_t i = 0; i < len; ++i) {
    h ^= p[i];
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::uint64_t fnv1a64(std::string_view s) { return fnv1a64(s.data(), s.size()); }

std::uint64_t mix_seed(std::uint64_t seed, std::string_view tag) {
  std::uint64_t h = fnv1a64(tag);
  std::uint64_t x = seed + 0x9e3779b97f4a7c15ULL + (h << 6) + (h >> 2);
  // splitmix64 finalizer
  x ^= x >> 30;
  x *= 0xbf58476d1ce4e5b9ULL;
  x ^= x >> 27;
  x *= 0x94d049bb133111ebULL;
  x ^= x >> 31;
  return x ^ h;
}

LogLevel log_level() {
  static LogLevel level = [] {
    const char* env = std::getenv("MPF_LOG");
    if (env == nullptr) return LogLevel::kInfo;
    std::string_view v(env);
    if (v == "error") return LogLevel::kError;
    if (v == "debug") return LogLevel::kDebug;
    return LogLevel::kInfo;
  }();
  return level;
}

namespace {
std::mutex log_mutex;

void emit(const char* prefix, const std::string& msg) {
  std::lock_guard<std::mutex> lock(log_mutex);
  std::fprintf(stderr, "%s%s\n", prefix, msg.c_str());
}
}  // namespace

void log_error(const std::string& msg) { emit("[mpf:error] ", msg); }

void log_info(const std::string& msg) {
  if (log_level() >= LogLevel::kInfo) emit("[mpf] ", msg);
}

void log_debug(const std::string& msg) {
  if (log_level() >= LogLevel::kDebug) emit("[mpf:debug] ", msg);
}

}  // namespace mpf
