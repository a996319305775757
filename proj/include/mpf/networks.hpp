#pragma once

#include <span>

#include "mpf/adam.hpp"
#include "mpf/params.hpp"
#include "mpf/tape.hpp"

namespace mpf::nets {

// Shared two-hidden-layer MLP plumbing. Parameter order within each network's
// bundle is fixed by the constructor and indexed positionally when tracked.
namespace detail {
ad::Tensor linear_init_weight(std::size_t fan_in, std::size_t fan_out, Rng& rng);
ad::Tensor linear_init_bias(std::size_t fan_in, std::size_t fan_out, Rng& rng);
}  // namespace detail

// Gaussian tanh-squashed policy pi(a|s,z): MLP (s ⊕ z) -> hidden -> hidden ->
// [mean head, log-std head], tanh hidden activations. Log-std is clamped to
// [-20, 2]; squashed actions live in (-1, 1)^|A|.
class PolicyNet {
 public:
  static constexpr double kLogStdMin = -20.0;
  static constexpr double kLogStdMax = 2.0;
  static constexpr double kSquashEps = 1e-6;

  PolicyNet() = default;
  PolicyNet(std::size_t obs_dim, std::size_t latent_dim, std::size_t action_dim,
            std::size_t hidden, Rng& rng);
  static PolicyNet from_params(ad::Params params, std::size_t latent_dim);

  std::vector<ad::Tensor> track(ad::Tape& t, bool differentiable) const {
    return params_.track(t, differentiable);
  }

  struct Dist {
    ad::Tensor mean;     // pre-squash mean f(s,z)
    ad::Tensor log_std;  // clamped
  };
  Dist dist(ad::Tape& t, const std::vector<ad::Tensor>& p, const ad::Tensor& s,
            const ad::Tensor& z) const;

  struct Sample {
    ad::Tensor action;    // [n, |A|], in (-1,1)
    ad::Tensor log_prob;  // [n, 1]
  };
  // Reparametrized sample a = tanh(f + sigma*eps) with caller-supplied noise;
  // log_prob carries the tanh change-of-variables correction.
  Sample sample(ad::Tape& t, const std::vector<ad::Tensor>& p, const ad::Tensor& s,
                const ad::Tensor& z, const ad::Tensor& eps) const;

  // Deterministic action tanh(f(s,z)); equals sample() with eps = 0.
  ad::Tensor mean_action(ad::Tape& t, const std::vector<ad::Tensor>& p, const ad::Tensor& s,
                         const ad::Tensor& z) const;

  // Single-observation rollout helpers (scratch tape inside). If log_prob is
  // non-null it receives log pi of the returned action.
  std::vector<double> act_stochastic(std::span<const double> obs, std::span<const double> z,
                                     Rng& rng, double* log_prob = nullptr) const;
  std::vector<double> act_mean(std::span<const double> obs, std::span<const double> z,
                               double* log_prob = nullptr) const;

  ad::Params& params() { return params_; }
  const ad::Params& params() const { return params_; }
  std::size_t obs_dim() const { return obs_dim_; }
  std::size_t latent_dim() const { return latent_dim_; }
  std::size_t action_dim() const { return action_dim_; }

 private:
  ad::Params params_;
  std::size_t obs_dim_ = 0, latent_dim_ = 0, action_dim_ = 0, hidden_ = 0;
};

// Context encoder q(z|c) = N(g(c), delta^2 I) with fixed spherical std delta.
// Prior rho(z) = N(0, sigma^2 I).
class EncoderNet {
 public:
  EncoderNet() = default;
  EncoderNet(std::size_t context_dim, std::size_t latent_dim, std::size_t hidden, double delta,
             Rng& rng);
  static EncoderNet from_params(ad::Params params, double delta);

  std::vector<ad::Tensor> track(ad::Tape& t, bool differentiable) const {
    return params_.track(t, differentiable);
  }

  ad::Tensor mean(ad::Tape& t, const std::vector<ad::Tensor>& p, const ad::Tensor& c) const;

  // z = g(c) + delta * omega with caller-supplied omega.
  ad::Tensor sample(ad::Tape& t, const std::vector<ad::Tensor>& p, const ad::Tensor& c,
                    const ad::Tensor& omega) const;

  // Closed-form KL(q(z|c) || N(0, sigma^2 I)) per row: [n, 1].
  ad::Tensor kl(ad::Tape& t, const std::vector<ad::Tensor>& p, const ad::Tensor& c,
                double prior_sigma) const;

  std::vector<double> encode_mean(std::span<const double> c) const;
  std::vector<double> encode_sample(std::span<const double> c, Rng& rng) const;

  // log q(z|c) - log rho(z) for a concrete draw z.
  double log_ratio(std::span<const double> z, std::span<const double> c,
                   double prior_sigma) const;

  ad::Params& params() { return params_; }
  const ad::Params& params() const { return params_; }
  double delta() const { return delta_; }
  std::size_t context_dim() const { return context_dim_; }
  std::size_t latent_dim() const { return latent_dim_; }

 private:
  ad::Params params_;
  std::size_t context_dim_ = 0, latent_dim_ = 0, hidden_ = 0;
  double delta_ = 0.01;
};

// Action-value network Q(s, a, c): MLP (s ⊕ a ⊕ c) -> hidden -> hidden -> 1.
class QNet {
 public:
  QNet() = default;
  QNet(std::size_t obs_dim, std::size_t action_dim, std::size_t context_dim, std::size_t hidden,
       Rng& rng);
  static QNet from_params(ad::Params params, std::size_t obs_dim, std::size_t action_dim);

  std::vector<ad::Tensor> track(ad::Tape& t, bool differentiable) const {
    return params_.track(t, differentiable);
  }

  // [n, 1]
  ad::Tensor forward(ad::Tape& t, const std::vector<ad::Tensor>& p, const ad::Tensor& s,
                     const ad::Tensor& a, const ad::Tensor& c) const;

  double value(std::span<const double> s, std::span<const double> a,
               std::span<const double> c) const;

  ad::Params& params() { return params_; }
  const ad::Params& params() const { return params_; }

 private:
  ad::Params params_;
  std::size_t obs_dim_ = 0, action_dim_ = 0, context_dim_ = 0, hidden_ = 0;
};

// Analytic density helpers used by tests and selection.
double tanh_gaussian_log_prob(std::span<const double> action, std::span<const double> mean,
                              std::span<const double> log_std);
double gaussian_kl_diag(std::span<const double> mean, double std_q, double std_p);

}  // namespace mpf::nets
