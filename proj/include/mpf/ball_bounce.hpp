#pragma once

#include <array>

#include "mpf/env.hpp"

namespace mpf::envs {

// One exact constant-acceleration step (gravity only): position advances with
// the average velocity, so ballistic arcs and mechanical energy are exact up
// to rounding at any dt.
void ballistic_step(std::array<double, 2>& pos, std::array<double, 2>& vel, double dt,
                    double gravity);

// 2-D paddle-and-ball tracking task. A ballistic ball is thrown toward a fixed
// desired hit point; the paddle (2 actuated DOF, acceleration control) must
// bounce it onto the context-dependent desired trajectory that reaches the
// goal after a fixed flight duration. Reward:
//   r = exp(-lambda1 * ||p_ball - p_targ(t,c)||^2) - lambda2 * ||a||^2
// Context dims: restitution, goal_x, goal_y, throwin_x, throwin_y.
// The observation is [paddle pos, paddle vel, ball pos, ball vel]; goal and
// restitution are hidden.
class BallBounceEnv final : public Env {
 public:
  static constexpr double kDt = 0.025;
  static constexpr std::size_t kHorizon = 100;
  static constexpr double kGravity = 9.8;
  static constexpr double kLambda1 = 10.0;
  static constexpr double kLambda2 = 5e-3;
  static constexpr double kHitTime = 0.5;        // s, ball reaches the hit point
  static constexpr double kFlightDuration = 1.0; // s, desired hit -> goal
  static constexpr double kPaddleAccel = 20.0;   // m/s^2 per unit action
  static constexpr double kPaddleHalfWidth = 0.25;
  static constexpr double kTangentialTransfer = 0.8;
  static constexpr double kBallDeviationLimit = 0.5;
  static constexpr double kPaddleLeash = 1.0;
  static constexpr std::array<double, 2> kHitPoint{0.0, 1.1};
  static constexpr std::array<double, 2> kPaddleStart{0.0, 1.0};

  explicit BallBounceEnv(std::optional<ContextSpec> spec = std::nullopt);

  std::size_t obs_dim() const override { return 8; }
  std::size_t action_dim() const override { return 2; }
  std::size_t horizon() const override { return kHorizon; }
  const ContextSpec& context_spec() const override { return spec_; }

  std::vector<double> reset(const ContextVector& context, std::uint64_t seed) override;
  StepResult step(std::span<const double> action) override;

  std::unique_ptr<Env> clone() const override { return std::make_unique<BallBounceEnv>(*this); }
  std::string name() const override { return "ballbounce32"; }

  // Desired ball position at time t: the incoming throw arc before the hit
  // time, then the goal-bound arc.
  std::array<double, 2> desired_position(double t) const;

  std::array<double, 2> ball_position() const { return ball_pos_; }
  std::array<double, 2> ball_velocity() const { return ball_vel_; }
  std::array<double, 2> paddle_position() const { return paddle_pos_; }
  std::array<double, 2> paddle_velocity() const { return paddle_vel_; }
  double ball_energy() const;
  bool had_contact() const { return had_contact_; }

 private:
  std::vector<double> observation() const;

  ContextSpec spec_;
  double restitution_ = 0.9;
  std::array<double, 2> goal_{};
  std::array<double, 2> throw_in_{};
  std::array<double, 2> throw_vel_{};   // initial ball velocity from the throw-in
  std::array<double, 2> out_vel_{};     // desired velocity at the hit point

  std::array<double, 2> paddle_pos_{};
  std::array<double, 2> paddle_vel_{};
  std::array<double, 2> ball_pos_{};
  std::array<double, 2> ball_vel_{};
  std::size_t t_ = 0;
  bool done_ = true;
  bool had_contact_ = false;
};

}  // namespace mpf::envs
