#pragma once

#include "mpf/env.hpp"

namespace mpf::envs {

// 1-D double integrator driven by a bounded force. Two reward modes mirroring
// the directional / target-velocity locomotion pair:
//   Dir: r = dir * v' - 0.05 * a^2,   dir in {-1, +1} from context
//   Vel: r = -|v' - v_target| - 0.05 * a^2
// Dynamics: v' = v + (a - drag*v)*dt, p' = p + v'*dt with dt=0.05, drag=0.1.
// Observation is [v]; the context (direction or target velocity) is hidden.
class LineRunnerEnv final : public Env {
 public:
  enum class Mode { kDir, kVel };

  static constexpr double kDt = 0.05;
  static constexpr double kDrag = 0.1;
  static constexpr double kActionCost = 0.05;
  static constexpr std::size_t kHorizon = 200;

  explicit LineRunnerEnv(Mode mode, std::optional<ContextSpec> spec = std::nullopt);

  std::size_t obs_dim() const override { return 1; }
  std::size_t action_dim() const override { return 1; }
  std::size_t horizon() const override { return kHorizon; }
  const ContextSpec& context_spec() const override { return spec_; }

  std::vector<double> reset(const ContextVector& context, std::uint64_t seed) override;
  StepResult step(std::span<const double> action) override;

  std::unique_ptr<Env> clone() const override { return std::make_unique<LineRunnerEnv>(*this); }
  std::string name() const override {
    return mode_ == Mode::kDir ? "linerunner_dir" : "linerunner_vel";
  }

  double position() const { return pos_; }
  double velocity() const { return vel_; }

 private:
  Mode mode_;
  ContextSpec spec_;
  double context_value_ = 1.0;
  double pos_ = 0.0;
  double vel_ = 0.0;
  std::size_t t_ = 0;
};

}  // namespace mpf::envs
