#pragma once

#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "mpf/context.hpp"

namespace mpf::envs {

struct StepResult {
  std::vector<double> obs;
  double reward = 0.0;
  bool done = false;       // episode over (failure, success or time limit)
  bool truncated = false;  // ended by the time limit only: no absorbing state,
                           // value bootstrapping stays on
};

// Deterministic contextual MDP: (context, seed, action sequence) fully
// determines the trajectory. Instances are independent and movable between
// threads; a single instance is single-threaded.
class Env {
 public:
  virtual ~Env() = default;

  virtual std::size_t obs_dim() const = 0;
  virtual std::size_t action_dim() const = 0;
  virtual std::size_t horizon() const = 0;
  virtual const ContextSpec& context_spec() const = 0;

  // Deterministic initial observation for (context, seed); resets step count.
  virtual std::vector<double> reset(const ContextVector& context, std::uint64_t seed) = 0;

  // Actions are clamped to [-1, 1] per dimension before use.
  virtual StepResult step(std::span<const double> action) = 0;

  virtual std::unique_ptr<Env> clone() const = 0;
  virtual std::string name() const = 0;
};

// Builtin environments: "linerunner_dir", "linerunner_vel", "ballbounce32".
// A custom context spec (same dimension layout, possibly different ranges or
// settings) may replace the bundled one.
std::unique_ptr<Env> make_env(const std::string& name,
                              std::optional<ContextSpec> spec = std::nullopt);
bool is_builtin_env(const std::string& name);

// Writes a rollout as CSV with header t,s...,a...,r,done.
void dump_trajectory_csv(const std::filesystem::path& path, Env& env, const ContextVector& c,
                         std::uint64_t seed, std::span<const std::vector<double>> actions);

}  // namespace mpf::envs
