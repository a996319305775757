#pragma once

#include "mpf/candidate.hpp"
#include "mpf/env.hpp"

namespace mpf::selection {

struct SelectionConfig {
  double alpha = 0.01;
  double beta = std::exp(-5.0);
  double gamma = 0.99;
  double prior_sigma = 1.0;
  std::size_t rollouts = 5;  // per (candidate, context)
};

struct ContextEval {
  double soft_return = 0.0;  // R(c) = sum_t gamma^t (r_t - alpha log pi_t)
  double log_ratio = 0.0;    // log q(z|c) / rho(z) for the z used in the rollout
};

// One stochastic rollout with z ~ q(z|c): the same z draw feeds both the
// KL-ratio term and the episode.
ContextEval rollout_eval(envs::Env& env, const sac::CandidatePolicy& cand,
                         const envs::ContextVector& c, const SelectionConfig& cfg, Rng& rng);

// R(c) averaged over cfg.rollouts episodes.
double soft_return(envs::Env& env, const sac::CandidatePolicy& cand,
                   const envs::ContextVector& c, const SelectionConfig& cfg, Rng& rng);

// Pure index arithmetic: mean_i [beta * log_ratio_i + return_i].
double index_from_terms(std::span<const double> log_ratios, std::span<const double> returns,
                        double beta);

// Performance index l_k over a fixed context set; fills cand.context_returns
// with the per-context mean soft return.
double selection_index(envs::Env& env, sac::CandidatePolicy& cand,
                       std::span<const envs::ContextVector> contexts, const SelectionConfig& cfg,
                       Rng& rng);

// Argmax over l_k, ties broken by lowest seed. Throws ConfigError on empty.
std::size_t select_policy(std::span<const sac::CandidatePolicy> candidates);
std::size_t select_policy(std::span<const double> indices, std::span<const std::uint64_t> seeds);

struct RegretReport {
  std::size_t pools = 0;
  std::size_t pool_size = 0;
  double mean_regret_index = 0.0;
  double mean_regret_random = 0.0;
  std::uint64_t bootstrap_seed = 0;
  // Per-pool regrets, for confidence interval work.
  std::vector<double> pool_regret_index;
  std::vector<double> pool_regret_random;
};

// Bootstrap top-one regret: pools of `pool_size` candidates sampled with
// replacement; per pool, |best heldout return - return of the candidate the
// index picks| vs the same for a uniformly random pick.
RegretReport top_one_regret(std::span<const double> indices,
                            std::span<const double> heldout_returns,
                            std::span<const std::uint64_t> seeds, std::size_t pools,
                            std::size_t pool_size, Rng& rng);

}  // namespace mpf::selection
