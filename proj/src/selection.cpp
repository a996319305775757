#include "mpf/selection.hpp"

#include <algorithm>
#include <cmath>

namespace mpf::selection {

ContextEval rollout_eval(envs::Env& env, const sac::CandidatePolicy& cand,
                         const envs::ContextVector& c, const SelectionConfig& cfg, Rng& rng) {
  std::vector<double> z = cand.encoder.encode_sample(c, rng);
  ContextEval eval;
  eval.log_ratio = cand.encoder.log_ratio(z, c, cfg.prior_sigma);

  std::vector<double> obs = env.reset(c, rng.next_u64());
  double discount = 1.0;
  while (true) {
    double log_prob = 0.0;
    std::vector<double> a = cand.policy.act_stochastic(obs, z, rng, &log_prob);
    envs::StepResult res = env.step(a);
    eval.soft_return += discount * (res.reward - cfg.alpha * log_prob);
    discount *= cfg.gamma;
    obs = std::move(res.obs);
    if (res.done) break;
  }
  return eval;
}

double soft_return(envs::Env& env, const sac::CandidatePolicy& cand,
                   const envs::ContextVector& c, const SelectionConfig& cfg, Rng& rng) {
  double total = 0.0;
  for (std::size_t i = 0; i < cfg.rollouts; ++i) {
    total += rollout_eval(env, cand, c, cfg, rng).soft_return;
  }
  return total / static_cast<double>(cfg.rollouts);
}

double index_from_terms(std::span<const double> log_ratios, std::span<const double> returns,
                        double beta) {
  if (log_ratios.size() != returns.size() || returns.empty()) {
    throw ConfigError("selection index: empty or mismatched term lists");
  }
  double acc = 0.0;
  for (std::size_t i = 0; i < returns.size(); ++i) {
    acc += beta * log_ratios[i] + returns[i];
  }
  return acc / static_cast<double>(returns.size());
}

double selection_index(envs::Env& env, sac::CandidatePolicy& cand,
                       std::span<const envs::ContextVector> contexts, const SelectionConfig& cfg,
                       Rng& rng) {
  if (contexts.empty()) throw ConfigError("selection index: empty context set");
  std::vector<double> log_ratios;
  std::vector<double> returns;
  cand.context_returns.clear();
  for (const envs::ContextVector& c : contexts) {
    double context_return = 0.0;
    for (std::size_t m = 0; m < cfg.rollouts; ++m) {
      ContextEval eval = rollout_eval(env, cand, c, cfg, rng);
      log_ratios.push_back(eval.log_ratio);
      returns.push_back(eval.soft_return);
      context_return += eval.soft_return;
    }
    cand.context_returns.push_back(context_return / static_cast<double>(cfg.rollouts));
  }
  cand.index = index_from_terms(log_ratios, returns, cfg.beta);
  return cand.index;
}

std::size_t select_policy(std::span<const double> indices, std::span<const std::uint64_t> seeds) {
  if (indices.empty() || indices.size() != seeds.size()) {
    throw ConfigError("select_policy: empty candidate list");
  }
  std::size_t best = 0;
  for (std::size_t i = 1; i < indices.size(); ++i) {
    if (indices[i] > indices[best] ||
        (indices[i] == indices[best] && seeds[i] < seeds[best])) {
      best = i;
    }
  }
  return best;
}

std::size_t select_policy(std::span<const sac::CandidatePolicy> candidates) {
  std::vector<double> indices;
  std::vector<std::uint64_t> seeds;
  for (const auto& c : candidates) {
    indices.push_back(c.index);
    seeds.push_back(c.seed);
  }
  return select_policy(indices, seeds);
}

RegretReport top_one_regret(std::span<const double> indices,
                            std::span<const double> heldout_returns,
                            std::span<const std::uint64_t> seeds, std::size_t pools,
                            std::size_t pool_size, Rng& rng) {
  if (pool_size < 1) throw ConfigError("top_one_regret: pool_size must be >= 1");
  if (indices.size() != heldout_returns.size() || indices.size() != seeds.size() ||
      indices.empty()) {
    throw ConfigError("top_one_regret: candidate lists are empty or mismatched");
  }
  RegretReport report;
  report.pools = pools;
  report.pool_size = pool_size;
  report.pool_regret_index.reserve(pools);
  report.pool_regret_random.reserve(pools);

  std::vector<std::size_t> pool(pool_size);
  for (std::size_t p = 0; p < pools; ++p) {
    for (std::size_t j = 0; j < pool_size; ++j) pool[j] = rng.index(indices.size());

    double best_return = -std::numeric_limits<double>::infinity();
    for (std::size_t j : pool) best_return = std::max(best_return, heldout_returns[j]);

    std::size_t chosen = pool[0];
    for (std::size_t j : pool) {
      if (indices[j] > indices[chosen] ||
          (indices[j] == indices[chosen] && seeds[j] < seeds[chosen])) {
        chosen = j;
      }
    }
    const std::size_t random_pick = pool[rng.index(pool_size)];

    report.pool_regret_index.push_back(std::abs(best_return - heldout_returns[chosen]));
    report.pool_regret_random.push_back(std::abs(best_return - heldout_returns[random_pick]));
  }

  double sum_i = 0.0, sum_r = 0.0;
  for (std::size_t p = 0; p < pools; ++p) {
    sum_i += report.pool_regret_index[p];
    sum_r += report.pool_regret_random[p];
  }
  report.mean_regret_index = pools > 0 ? sum_i / static_cast<double>(pools) : 0.0;
  report.mean_regret_random = pools > 0 ? sum_r / static_cast<double>(pools) : 0.0;
  return report;
}

}  // namespace mpf::selection
