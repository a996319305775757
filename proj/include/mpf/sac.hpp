#pragma once

#include <functional>
#include <limits>
#include <optional>

#include "mpf/candidate.hpp"
#include "mpf/env.hpp"
#include "mpf/replay.hpp"

namespace mpf::sac {

struct TrainConfig {
  double gamma = 0.99;
  double beta = std::exp(-5.0);
  double tau = 0.005;
  std::size_t batch = 256;
  std::size_t collect_steps = 1000;   // env steps per epoch
  std::size_t update_iters = 1000;    // gradient rounds per epoch
  std::size_t epochs = 50;
  double q_lr = 1e-3;
  double policy_lr = 1e-3;
  double encoder_lr = 1e-3;
  double alpha_lr = 1e-3;
  // NaN resolves to -|A| at setup.
  double target_entropy = std::numeric_limits<double>::quiet_NaN();
  std::size_t buffer_capacity = 1000000;
  std::size_t hidden = 256;           // policy and Q hidden width
  std::size_t encoder_hidden = 64;
  std::size_t latent_dim = 1;
  double encoder_delta = 0.01;
  double prior_sigma = 1.0;
  bool alpha_autotune = true;
  double alpha_init = 0.1;
  bool single_q_actor = false;        // ablation: plain Q1 in the actor term
  std::uint64_t seed = 0;

  void validate() const;
};

struct EpochLog {
  std::size_t epoch = 0;
  std::size_t env_steps = 0;
  double q_loss = 0.0;
  double pi_loss = 0.0;
  double alpha = 0.0;
  double mean_return = 0.0;
  double mean_entropy = 0.0;
};

// Target-side state value: min over twin target Q nets minus alpha * log pi,
// with fresh z' ~ q(z|c) and a' ~ pi(a|s',z') from the supplied noise. No
// gradient flows out (everything is tracked as constants).
ad::Tensor v_bar(ad::Tape& t, const CandidatePolicy& cand, const ad::Tensor& sp,
                 const ad::Tensor& c, double alpha, const ad::Tensor& eps,
                 const ad::Tensor& omega);

// Bellman residual for both critics against a constant target y:
// mean over the batch of (Q1 - y)^2 + (Q2 - y)^2.
ad::Tensor q_loss(ad::Tape& t, const nets::QNet& q1, const std::vector<ad::Tensor>& p1,
                  const nets::QNet& q2, const std::vector<ad::Tensor>& p2, const ad::Tensor& s,
                  const ad::Tensor& a, const ad::Tensor& c, const ad::Tensor& y);

// Critic evaluation seam for the actor term; production uses the twin minimum
// of the current (non-target) Q nets.
using CriticFn = std::function<ad::Tensor(ad::Tape&, const ad::Tensor& s, const ad::Tensor& a,
                                          const ad::Tensor& c)>;

// mean[alpha * log pi(a'|s,z') - critic(s,a',c)] + beta * mean[KL(q(z|c)||rho)]
// Gradients flow to the policy and encoder tracks only.
ad::Tensor policy_encoder_loss(ad::Tape& t, const nets::PolicyNet& policy,
                               const std::vector<ad::Tensor>& pp, const nets::EncoderNet& encoder,
                               const std::vector<ad::Tensor>& pe, const ad::Tensor& s,
                               const ad::Tensor& c, const ad::Tensor& eps,
                               const ad::Tensor& omega, double alpha, double beta,
                               double prior_sigma, const CriticFn& critic);

// mean[alpha * (-log pi - target_entropy)] with the log-probs held constant.
ad::Tensor alpha_loss(ad::Tape& t, const ad::Tensor& alpha_log_leaf,
                      const ad::Tensor& neg_logp_minus_target);

// target <- tau * online + (1 - tau) * target, elementwise. Requires
// 0 < tau <= 1 and matching bundles.
void polyak_update(ad::Params& target, const ad::Params& online, double tau);

// Called once per optimizer event with one of "policy", "encoder", "q",
// "alpha", "target"; used to assert the update ordering.
using UpdateHook = std::function<void(std::string_view)>;

using EpochCallback = std::function<void(std::size_t epoch, const CandidatePolicy&)>;

// Foundation policy acquisition: per epoch, collect steps under pi(a|s,z)
// with (c, z) resampled at every episode boundary, then run update rounds of
// {policy, encoder, Q, temperature, targets} in that order. Deterministic for
// a given (env, config) pair. Throws NumericError naming the epoch and loss
// on divergence.
CandidatePolicy train_foundation(envs::Env& env, const TrainConfig& cfg,
                                 std::vector<EpochLog>* log = nullptr,
                                 const UpdateHook& hook = nullptr,
                                 const EpochCallback& epoch_cb = nullptr);

// Mean undiscounted env return of `episodes` rollouts with deterministic
// actions mu(s, z), z = g(c).
double eval_mean_return(envs::Env& env, const CandidatePolicy& cand,
                        const envs::ContextVector& c, std::size_t episodes, Rng& rng);

}  // namespace mpf::sac
