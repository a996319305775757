#include "mpf/tpe.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "mpf/csv.hpp"
#include "mpf/networks.hpp"

namespace mpf::tpe {

void TpeConfig::validate() const {
  if (!(std::isfinite(lo) && std::isfinite(hi) && lo < hi)) {
    throw ConfigError("tpe: bounds must be finite with lo < hi");
  }
  if (!(quantile > 0.0 && quantile < 1.0)) throw ConfigError("tpe: quantile must be in (0, 1)");
  if (candidates == 0) throw ConfigError("tpe: candidates must be positive");
}

namespace {

double std_normal_cdf(double x) { return 0.5 * std::erfc(-x / std::numbers::sqrt2); }

}  // namespace

ParzenKde ParzenKde::fit(std::vector<double> points, double lo, double hi) {
  ParzenKde kde;
  kde.lo = lo;
  kde.hi = hi;
  std::sort(points.begin(), points.end());
  const double range = hi - lo;
  // Spacing rule with the count-scaled clip: kernels stay wide while the set
  // is small and sharpen as evidence accumulates; 1e-3 * range is the hard
  // floor.
  const double clip = range / static_cast<double>(std::min<std::size_t>(100, points.size() + 1));
  const double min_bw = std::max(1e-3 * range, clip);
  kde.centers = points;
  kde.bandwidths.resize(points.size());
  for (std::size_t i = 0; i < points.size(); ++i) {
    const double left = i > 0 ? points[i] - points[i - 1] : 0.0;
    const double right = i + 1 < points.size() ? points[i + 1] - points[i] : 0.0;
    kde.bandwidths[i] = std::min(std::max({left, right, min_bw}), range);
  }
  // Prior smoothing component over the whole domain keeps the mixture proper
  // and sustains exploration once the observed points cluster.
  kde.centers.push_back(0.5 * (lo + hi));
  kde.bandwidths.push_back(range);
  return kde;
}

double ParzenKde::log_pdf(double z) const {
  double acc = 0.0;
  for (std::size_t i = 0; i < centers.size(); ++i) {
    const double bw = bandwidths[i];
    const double u = (z - centers[i]) / bw;
    const double mass =
        std_normal_cdf((hi - centers[i]) / bw) - std_normal_cdf((lo - centers[i]) / bw);
    acc += std::exp(-0.5 * u * u) / (bw * std::sqrt(2.0 * std::numbers::pi) * mass);
  }
  return std::log(acc / static_cast<double>(centers.size()));
}

double ParzenKde::sample(Rng& rng) const {
  const std::size_t i = rng.index(centers.size());
  // Rejection against the truncation; bandwidths are comparable to the range,
  // so acceptance is fast. Clamp as a last resort.
  for (int attempt = 0; attempt < 100; ++attempt) {
    const double z = centers[i] + bandwidths[i] * rng.normal();
    if (z >= lo && z <= hi) return z;
  }
  return std::clamp(centers[i], lo, hi);
}

TpeState::TpeState(TpeConfig cfg, std::uint64_t seed) : cfg_(cfg), rng_(seed) {
  cfg_.validate();
}

void TpeState::record(double z, double j, double soft_return, double kl_penalty) {
  if (!std::isfinite(j) || !std::isfinite(z)) {
    throw NumericError("tpe: non-finite trial (z=" + std::to_string(z) + ", J=" +
                       std::to_string(j) + ")");
  }
  TrialRecord rec;
  rec.k = history_.size();
  rec.z = z;
  rec.j = j;
  rec.soft_return = soft_return;
  rec.kl_penalty = kl_penalty;
  history_.push_back(rec);
}

const TrialRecord& TpeState::best() const {
  if (history_.empty()) throw ConfigError("tpe: no trials recorded");
  std::size_t arg = 0;
  for (std::size_t i = 1; i < history_.size(); ++i) {
    if (history_[i].j > history_[arg].j) arg = i;
  }
  return history_[arg];
}

double TpeState::suggest() {
  const std::size_t n = history_.size();
  if (n < cfg_.startup || n < 2) return rng_.uniform(cfg_.lo, cfg_.hi);

  // Degenerate history (all J equal): no split is informative.
  bool all_equal = true;
  for (std::size_t i = 1; i < n; ++i) {
    if (history_[i].j != history_[0].j) {
      all_equal = false;
      break;
    }
  }
  if (all_equal) return rng_.uniform(cfg_.lo, cfg_.hi);

  // Maximization: top quantile -> good set l(z), rest -> g(z).
  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = i;
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (history_[a].j != history_[b].j) return history_[a].j > history_[b].j;
    return a < b;
  });
  const std::size_t n_good = std::clamp<std::size_t>(
      static_cast<std::size_t>(std::ceil(cfg_.quantile * static_cast<double>(n))), 1, n - 1);

  std::vector<double> good, rest;
  good.reserve(n_good);
  rest.reserve(n - n_good);
  for (std::size_t i = 0; i < n; ++i) {
    (i < n_good ? good : rest).push_back(history_[order[i]].z);
  }

  const ParzenKde l = ParzenKde::fit(std::move(good), cfg_.lo, cfg_.hi);
  const ParzenKde g = ParzenKde::fit(std::move(rest), cfg_.lo, cfg_.hi);

  double best_z = 0.0;
  double best_score = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < cfg_.candidates; ++i) {
    const double z = l.sample(rng_);
    const double score = l.log_pdf(z) - g.log_pdf(z);
    if (score > best_score) {
      best_score = score;
      best_z = z;
    }
  }
  return best_z;
}

double evaluate_latent(envs::Env& env, const sac::CandidatePolicy& cand,
                       const envs::ContextVector& c, double z, const GenConfig& cfg,
                       double* soft_return, double* kl_penalty) {
  const std::size_t latent_dim = cand.policy.latent_dim();
  std::vector<double> zvec(latent_dim, z);

  double ret = 0.0;
  double discount = 1.0;
  std::vector<double> obs = env.reset(c, 0);
  while (true) {
    double log_prob = 0.0;
    std::vector<double> a = cand.policy.act_mean(obs, zvec, &log_prob);
    envs::StepResult res = env.step(a);
    ret += discount * (res.reward - cfg.alpha * log_prob);
    discount *= cfg.gamma;
    obs = std::move(res.obs);
    if (res.done) break;
  }

  // Generation-phase encoder is N(z, I); prior rho = N(0, sigma^2 I).
  const double kl = nets::gaussian_kl_diag(zvec, 1.0, cfg.prior_sigma);
  if (soft_return != nullptr) *soft_return = ret;
  if (kl_penalty != nullptr) *kl_penalty = kl;
  return ret - cfg.beta * kl;
}

GenerationResult skill_generate(envs::Env& env, const sac::CandidatePolicy& cand,
                                const envs::ContextVector& c, std::size_t k_max,
                                const TpeConfig& tpe_cfg, const GenConfig& gen_cfg,
                                std::uint64_t seed) {
  TpeState state(tpe_cfg, seed);
  GenerationResult result;
  std::size_t failures = 0;
  for (std::size_t k = 0; k < k_max; ++k) {
    const double z = state.suggest();
    double r = 0.0, kl = 0.0;
    double j;
    try {
      j = evaluate_latent(env, cand, c, z, gen_cfg, &r, &kl);
    } catch (const NumericError&) {
      failures += 1;
      continue;
    }
    state.record(z, j, r, kl);
  }
  if (state.history().empty()) {
    throw NumericError("skill_generate: all " + std::to_string(failures) +
                       " trials failed numerically");
  }
  result.history = state.history();
  result.best = state.best();
  return result;
}

void write_generation_csv(const std::filesystem::path& path, const GenerationResult& result) {
  io::CsvWriter csv(path);
  const std::vector<std::string> header{"k", "z", "J", "R", "kl_penalty"};
  csv.write_header(header);
  for (const TrialRecord& rec : result.history) {
    csv.write_row(std::vector<double>{static_cast<double>(rec.k), rec.z, rec.j, rec.soft_return,
                                      rec.kl_penalty});
  }
  csv.write_raw_line("best," + io::fmt_double(result.best.z) + "," +
                     io::fmt_double(result.best.j));
}

}  // namespace mpf::tpe
