#pragma once

#include "mpf/candidate.hpp"
#include "mpf/env.hpp"

namespace mpf::tpe {

struct TrialRecord {
  std::size_t k = 0;       // trial index
  double z = 0.0;          // latent value
  double j = 0.0;          // objective J(z)
  double soft_return = 0.0;
  double kl_penalty = 0.0;
};

struct TpeConfig {
  double lo = -3.0;
  double hi = 3.0;
  double quantile = 0.25;      // good-set fraction (maximization)
  std::size_t startup = 10;    // uniform trials before the model kicks in
  std::size_t candidates = 24; // samples drawn from l(z) per suggestion

  void validate() const;
};

// From-scratch 1-D tree-structured Parzen estimator, maximizing. History is
// split at the quantile of J; candidates drawn from the good-set KDE are
// ranked by the density ratio l(z)/g(z). Suggestions always land in bounds.
class TpeState {
 public:
  TpeState(TpeConfig cfg, std::uint64_t seed);

  double suggest();
  void record(double z, double j, double soft_return = 0.0, double kl_penalty = 0.0);

  const std::vector<TrialRecord>& history() const { return history_; }
  const TpeConfig& config() const { return cfg_; }
  // Best-J record so far; throws ConfigError when the history is empty.
  const TrialRecord& best() const;

 private:
  TpeConfig cfg_;
  Rng rng_;
  std::vector<TrialRecord> history_;
};

// Parzen mixture over sorted points with per-point bandwidth
// max(neighbor spacing, 1e-3 * range), truncated to [lo, hi], plus one
// domain-wide prior component (classic TPE smoothing). Exposed for tests of
// the sampler.
struct ParzenKde {
  std::vector<double> centers;
  std::vector<double> bandwidths;
  double lo = 0.0, hi = 0.0;

  static ParzenKde fit(std::vector<double> points, double lo, double hi);
  double log_pdf(double z) const;
  double sample(Rng& rng) const;
};

struct GenConfig {
  double alpha = 0.01;
  double beta = std::exp(-5.0);
  double gamma = 1.0;
  double prior_sigma = 1.0;
};

// J(z) = sum_t gamma^t (r_t - alpha log pi_t) - beta * KL(N(z, I) || rho),
// rolled out with deterministic actions mu(s, z). Optionally reports the
// return and KL parts.
double evaluate_latent(envs::Env& env, const sac::CandidatePolicy& cand,
                       const envs::ContextVector& c, double z, const GenConfig& cfg,
                       double* soft_return = nullptr, double* kl_penalty = nullptr);

struct GenerationResult {
  TrialRecord best;
  std::vector<TrialRecord> history;
};

// Algorithm loop: suggest -> rollout -> record -> update model, k_max times;
// returns the history argmax. Throws NumericError carrying the partial
// history size if every trial failed numerically.
GenerationResult skill_generate(envs::Env& env, const sac::CandidatePolicy& cand,
                                const envs::ContextVector& c, std::size_t k_max,
                                const TpeConfig& tpe_cfg, const GenConfig& gen_cfg,
                                std::uint64_t seed);

// History CSV: k,z,J,R,kl_penalty rows and a final `best,z*,J*` line.
void write_generation_csv(const std::filesystem::path& path, const GenerationResult& result);

}  // namespace mpf::tpe
