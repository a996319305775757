#include "mpf/line_runner.hpp"

#include <algorithm>
#include <cmath>

namespace mpf::envs {

LineRunnerEnv::LineRunnerEnv(Mode mode, std::optional<ContextSpec> spec)
    : mode_(mode),
      spec_(spec ? std::move(*spec)
                 : ContextSpec::builtin(mode == Mode::kDir ? "linerunner_dir"
                                                           : "linerunner_vel")) {
  spec_.validate();
  if (spec_.size() != 1) {
    throw ConfigError("linerunner: context spec must have exactly 1 dim, got " +
                      std::to_string(spec_.size()));
  }
}

std::vector<double> LineRunnerEnv::reset(const ContextVector& context, std::uint64_t seed) {
  (void)seed;  // the initial state is context- and seed-independent
  check_context(spec_, context);
  context_value_ = context[0];
  pos_ = 0.0;
  vel_ = 0.0;
  t_ = 0;
  return {vel_};
}

StepResult LineRunnerEnv::step(std::span<const double> action) {
  if (action.size() != 1) {
    throw ShapeError("linerunner: expected 1 action dim, got " + std::to_string(action.size()));
  }
  if (t_ >= kHorizon) throw Error("linerunner: step() after episode end");
  const double a = std::clamp(action[0], -1.0, 1.0);

  vel_ += (a - kDrag * vel_) * kDt;
  pos_ += vel_ * kDt;
  t_ += 1;

  double reward;
  if (mode_ == Mode::kDir) {
    reward = context_value_ * vel_ - kActionCost * a * a;
  } else {
    reward = -std::abs(vel_ - context_value_) - kActionCost * a * a;
  }
  if (!std::isfinite(vel_) || !std::isfinite(pos_) || !std::isfinite(reward)) {
    throw NumericError("linerunner: non-finite state at t=" + std::to_string(t_));
  }
  const bool horizon_hit = t_ >= kHorizon;
  return {{vel_}, reward, horizon_hit, horizon_hit};
}

}  // namespace mpf::envs
