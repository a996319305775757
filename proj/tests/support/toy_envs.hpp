#pragma once

// Purpose-built environments for oracle tests: an enumerable tabular cMDP, a
// fixed two-step reward chain, and action/latent-sensitive rigs.

#include <array>

#include "mpf/env.hpp"

namespace mpf::test {

// 3-state, 2-effective-action, 2-context cMDP. Observations are one-hot; the
// continuous action acts through its sign, so the optimal soft Q is piecewise
// constant in a and the continuous soft value integral collapses to two
// unit-length intervals. Episodes truncate (never terminate) so the learned
// fixed point matches infinite-horizon value iteration.
class TabularCmdpEnv final : public envs::Env {
 public:
  static constexpr std::size_t kStates = 3;
  static constexpr std::size_t kHorizon = 25;

  // next_state[s][a_sign], reward[s][a_sign] with context 1 swapping the
  // action roles.
  static constexpr std::array<std::array<std::size_t, 2>, 3> kNext{{{1, 2}, {2, 0}, {0, 1}}};
  static constexpr std::array<std::array<double, 2>, 3> kReward{
      {{0.30, 0.00}, {0.50, 0.10}, {0.20, 0.40}}};

  TabularCmdpEnv()
      : spec_(envs::ContextSpec::from_json_text(
            R"({"name":"tabular2","dims":[{"name":"mode","kind":"discrete-two-setting","settings":[0.0,1.0]}]})",
            "tabular2")) {}

  std::size_t obs_dim() const override { return kStates; }
  std::size_t action_dim() const override { return 1; }
  std::size_t horizon() const override { return kHorizon; }
  const envs::ContextSpec& context_spec() const override { return spec_; }

  std::vector<double> reset(const envs::ContextVector& context, std::uint64_t seed) override {
    envs::check_context(spec_, context);
    mode_ = context[0] >= 0.5 ? 1 : 0;
    state_ = seed % kStates;  // deterministic start spread over states
    t_ = 0;
    return one_hot(state_);
  }

  envs::StepResult step(std::span<const double> action) override {
    const std::size_t a_raw = action[0] >= 0.0 ? 0 : 1;
    const std::size_t a_eff = mode_ == 1 ? 1 - a_raw : a_raw;
    const double r = kReward[state_][a_eff];
    state_ = kNext[state_][a_eff];
    t_ += 1;
    const bool over = t_ >= kHorizon;
    return {one_hot(state_), r, over, over};
  }

  std::unique_ptr<envs::Env> clone() const override {
    return std::make_unique<TabularCmdpEnv>(*this);
  }
  std::string name() const override { return "tabular2"; }

  static double reward_of(std::size_t s, std::size_t a_raw, std::size_t mode) {
    const std::size_t a_eff = mode == 1 ? 1 - a_raw : a_raw;
    return kReward[s][a_eff];
  }
  static std::size_t next_of(std::size_t s, std::size_t a_raw, std::size_t mode) {
    const std::size_t a_eff = mode == 1 ? 1 - a_raw : a_raw;
    return kNext[s][a_eff];
  }

  static std::vector<double> one_hot(std::size_t s) {
    std::vector<double> obs(kStates, 0.0);
    obs[s] = 1.0;
    return obs;
  }

 private:
  envs::ContextSpec spec_;
  std::size_t state_ = 0;
  std::size_t mode_ = 0;
  std::size_t t_ = 0;
};

// Soft value iteration for TabularCmdpEnv over the continuous action space:
// Q is piecewise constant in a, each sign interval has Lebesgue measure 1, so
// V(s,c) = alpha * log(exp(Q(s,+,c)/alpha) + exp(Q(s,-,c)/alpha)).
// Returns Q[mode][state][a_sign] at the fixed point.
inline std::array<std::array<std::array<double, 2>, 3>, 2> tabular_soft_vi(double gamma,
                                                                           double alpha,
                                                                           double tol = 1e-13) {
  std::array<std::array<std::array<double, 2>, 3>, 2> q{};
  for (int sweep = 0; sweep < 100000; ++sweep) {
    double delta = 0.0;
    for (std::size_t mode = 0; mode < 2; ++mode) {
      for (std::size_t s = 0; s < 3; ++s) {
        for (std::size_t a = 0; a < 2; ++a) {
          const std::size_t sp = TabularCmdpEnv::next_of(s, a, mode);
          const double q0 = q[mode][sp][0];
          const double q1 = q[mode][sp][1];
          const double m = std::max(q0, q1);
          const double v =
              alpha * (m / alpha + std::log(std::exp((q0 - m) / alpha) +
                                            std::exp((q1 - m) / alpha)));
          const double target = TabularCmdpEnv::reward_of(s, a, mode) + gamma * v;
          delta = std::max(delta, std::abs(target - q[mode][s][a]));
          q[mode][s][a] = target;
        }
      }
    }
    if (delta < tol) break;
  }
  return q;
}

// Deterministic two-step chain with rewards 1 then 2; obs is the step index.
class TwoStepEnv final : public envs::Env {
 public:
  TwoStepEnv()
      : spec_(envs::ContextSpec::from_json_text(
            R"({"name":"twostep","dims":[{"name":"unused","kind":"uniform-range","low":0.0,"high":1.0}]})",
            "twostep")) {}

  std::size_t obs_dim() const override { return 1; }
  std::size_t action_dim() const override { return 1; }
  std::size_t horizon() const override { return 2; }
  const envs::ContextSpec& context_spec() const override { return spec_; }

  std::vector<double> reset(const envs::ContextVector&, std::uint64_t) override {
    t_ = 0;
    return {0.0};
  }
  envs::StepResult step(std::span<const double>) override {
    t_ += 1;
    const double r = t_ == 1 ? 1.0 : 2.0;
    const bool over = t_ >= 2;
    return {{static_cast<double>(t_)}, r, over, over};
  }
  std::unique_ptr<envs::Env> clone() const override { return std::make_unique<TwoStepEnv>(*this); }
  std::string name() const override { return "twostep"; }

 private:
  envs::ContextSpec spec_;
  std::size_t t_ = 0;
};

// Reward equals the first action component; used to rig J(z) monotone through
// a hand-built policy whose action increases with z.
class ActionRewardEnv final : public envs::Env {
 public:
  explicit ActionRewardEnv(std::size_t horizon = 10)
      : horizon_(horizon),
        spec_(envs::ContextSpec::from_json_text(
            R"({"name":"actionreward","dims":[{"name":"unused","kind":"uniform-range","low":0.0,"high":1.0}]})",
            "actionreward")) {}

  std::size_t obs_dim() const override { return 1; }
  std::size_t action_dim() const override { return 1; }
  std::size_t horizon() const override { return horizon_; }
  const envs::ContextSpec& context_spec() const override { return spec_; }

  std::vector<double> reset(const envs::ContextVector&, std::uint64_t) override {
    t_ = 0;
    return {0.0};
  }
  envs::StepResult step(std::span<const double> action) override {
    t_ += 1;
    const bool over = t_ >= horizon_;
    return {{0.0}, action[0], over, over};
  }
  std::unique_ptr<envs::Env> clone() const override {
    return std::make_unique<ActionRewardEnv>(*this);
  }
  std::string name() const override { return "actionreward"; }

 private:
  std::size_t horizon_;
  envs::ContextSpec spec_;
  std::size_t t_ = 0;
};

// Constant reward regardless of actions: J depends on z only through the KL
// penalty, so argmax J(z) = 0.
class ConstRewardEnv final : public envs::Env {
 public:
  explicit ConstRewardEnv(double reward = 0.5, std::size_t horizon = 10)
      : reward_(reward), horizon_(horizon),
        spec_(envs::ContextSpec::from_json_text(
            R"({"name":"constreward","dims":[{"name":"unused","kind":"uniform-range","low":0.0,"high":1.0}]})",
            "constreward")) {}

  std::size_t obs_dim() const override { return 1; }
  std::size_t action_dim() const override { return 1; }
  std::size_t horizon() const override { return horizon_; }
  const envs::ContextSpec& context_spec() const override { return spec_; }

  std::vector<double> reset(const envs::ContextVector&, std::uint64_t) override {
    t_ = 0;
    return {0.0};
  }
  envs::StepResult step(std::span<const double>) override {
    t_ += 1;
    const bool over = t_ >= horizon_;
    return {{0.0}, reward_, over, over};
  }
  std::unique_ptr<envs::Env> clone() const override {
    return std::make_unique<ConstRewardEnv>(*this);
  }
  std::string name() const override { return "constreward"; }

 private:
  double reward_;
  std::size_t horizon_;
  envs::ContextSpec spec_;
  std::size_t t_ = 0;
};

}  // namespace mpf::test
