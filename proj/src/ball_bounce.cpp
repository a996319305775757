#include "mpf/ball_bounce.hpp"

#include <algorithm>
#include <cmath>

namespace mpf::envs {

void ballistic_step(std::array<double, 2>& pos, std::array<double, 2>& vel, double dt,
                    double gravity) {
  pos[0] += vel[0] * dt;
  pos[1] += vel[1] * dt - 0.5 * gravity * dt * dt;
  vel[1] -= gravity * dt;
}

BallBounceEnv::BallBounceEnv(std::optional<ContextSpec> spec)
    : spec_(spec ? std::move(*spec) : ContextSpec::builtin("ballbounce32")) {
  spec_.validate();
  if (spec_.size() != 5) {
    throw ConfigError("ballbounce: context spec must have exactly 5 dims, got " +
                      std::to_string(spec_.size()));
  }
}

std::vector<double> BallBounceEnv::reset(const ContextVector& context, std::uint64_t seed) {
  (void)seed;
  check_context(spec_, context);
  restitution_ = context[0];
  goal_ = {context[1], context[2]};
  throw_in_ = {context[3], context[4]};

  // Throw velocity puts the ball exactly on the hit point at kHitTime; the
  // outgoing desired arc reaches the goal after kFlightDuration.
  throw_vel_ = {(kHitPoint[0] - throw_in_[0]) / kHitTime,
                (kHitPoint[1] - throw_in_[1]) / kHitTime + 0.5 * kGravity * kHitTime};
  out_vel_ = {(goal_[0] - kHitPoint[0]) / kFlightDuration,
              (goal_[1] - kHitPoint[1]) / kFlightDuration + 0.5 * kGravity * kFlightDuration};

  paddle_pos_ = kPaddleStart;
  paddle_vel_ = {0.0, 0.0};
  ball_pos_ = throw_in_;
  ball_vel_ = throw_vel_;
  t_ = 0;
  done_ = false;
  had_contact_ = false;
  return observation();
}

std::array<double, 2> BallBounceEnv::desired_position(double t) const {
  if (t <= kHitTime) {
    return {throw_in_[0] + throw_vel_[0] * t,
            throw_in_[1] + throw_vel_[1] * t - 0.5 * kGravity * t * t};
  }
  const double u = t - kHitTime;
  return {kHitPoint[0] + out_vel_[0] * u,
          kHitPoint[1] + out_vel_[1] * u - 0.5 * kGravity * u * u};
}

double BallBounceEnv::ball_energy() const {
  return 0.5 * (ball_vel_[0] * ball_vel_[0] + ball_vel_[1] * ball_vel_[1]) +
         kGravity * ball_pos_[1];
}

std::vector<double> BallBounceEnv::observation() const {
  return {paddle_pos_[0], paddle_pos_[1], paddle_vel_[0], paddle_vel_[1],
          ball_pos_[0],   ball_pos_[1],   ball_vel_[0],   ball_vel_[1]};
}

StepResult BallBounceEnv::step(std::span<const double> action) {
  if (action.size() != 2) {
    throw ShapeError("ballbounce: expected 2 action dims, got " + std::to_string(action.size()));
  }
  if (done_) throw Error("ballbounce: step() after episode end");
  const double ax = std::clamp(action[0], -1.0, 1.0);
  const double ay = std::clamp(action[1], -1.0, 1.0);

  const std::array<double, 2> paddle_pos_old = paddle_pos_;
  const std::array<double, 2> ball_pos_old = ball_pos_;

  // Paddle: semi-implicit Euler (velocity then position).
  paddle_vel_[0] += ax * kPaddleAccel * kDt;
  paddle_vel_[1] += ay * kPaddleAccel * kDt;
  paddle_pos_[0] += paddle_vel_[0] * kDt;
  paddle_pos_[1] += paddle_vel_[1] * kDt;

  ballistic_step(ball_pos_, ball_vel_, kDt, kGravity);

  // Contact: ball crossed the paddle plane from above during the step, within
  // the segment. Restitution acts on the normal component of the relative
  // velocity, the tangential component transfers toward the paddle frame.
  const double rel_before = ball_pos_old[1] - paddle_pos_old[1];
  const double rel_after = ball_pos_[1] - paddle_pos_[1];
  if (rel_before >= 0.0 && rel_after < 0.0) {
    const double theta = rel_before / (rel_before - rel_after);
    const double ball_x_cross = ball_pos_old[0] + theta * (ball_pos_[0] - ball_pos_old[0]);
    const double paddle_x_cross =
        paddle_pos_old[0] + theta * (paddle_pos_[0] - paddle_pos_old[0]);
    const double rel_vy = ball_vel_[1] - paddle_vel_[1];
    if (std::abs(ball_x_cross - paddle_x_cross) <= kPaddleHalfWidth && rel_vy < 0.0) {
      const double ball_y_cross = ball_pos_old[1] + theta * (ball_pos_[1] - ball_pos_old[1]);
      const double rel_vx = ball_vel_[0] - paddle_vel_[0];
      ball_vel_[0] = paddle_vel_[0] + (1.0 - kTangentialTransfer) * rel_vx;
      ball_vel_[1] = paddle_vel_[1] - restitution_ * rel_vy;
      const double remaining = (1.0 - theta) * kDt;
      ball_pos_[0] = ball_x_cross + ball_vel_[0] * remaining;
      ball_pos_[1] = ball_y_cross + ball_vel_[1] * remaining;
      had_contact_ = true;
    }
  }

  t_ += 1;
  const double now = static_cast<double>(t_) * kDt;
  const std::array<double, 2> targ = desired_position(now);
  const double dx = ball_pos_[0] - targ[0];
  const double dy = ball_pos_[1] - targ[1];
  const double dist2 = dx * dx + dy * dy;
  const double reward = std::exp(-kLambda1 * dist2) - kLambda2 * (ax * ax + ay * ay);

  const double px = paddle_pos_[0] - kHitPoint[0];
  const double py = paddle_pos_[1] - kHitPoint[1];
  const bool ball_lost = std::sqrt(dist2) > kBallDeviationLimit;
  const bool paddle_lost = std::sqrt(px * px + py * py) > kPaddleLeash;
  const bool horizon_hit = t_ >= kHorizon;
  done_ = ball_lost || paddle_lost || horizon_hit;

  if (!std::isfinite(reward) || !std::isfinite(ball_pos_[0]) || !std::isfinite(ball_pos_[1]) ||
      !std::isfinite(paddle_pos_[0]) || !std::isfinite(paddle_pos_[1])) {
    throw NumericError("ballbounce: non-finite state at t=" + std::to_string(t_));
  }
  return {observation(), reward, done_, horizon_hit && !ball_lost && !paddle_lost};
}

}  // namespace mpf::envs
