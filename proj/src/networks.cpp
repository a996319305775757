#include "mpf/networks.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace mpf::nets {

using ad::Tape;
using ad::Tensor;

namespace detail {

Tensor linear_init_weight(std::size_t fan_in, std::size_t fan_out, Rng& rng) {
  const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
  Tensor w = Tensor::zeros({fan_in, fan_out});
  for (double& v : w.data) v = rng.uniform(-bound, bound);
  return w;
}

Tensor linear_init_bias(std::size_t fan_in, std::size_t fan_out, Rng& rng) {
  const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
  Tensor b = Tensor::zeros({fan_out});
  for (double& v : b.data) v = rng.uniform(-bound, bound);
  return b;
}

// Indices within each bundle; fixed by the construction order below.
enum : std::size_t { kW0 = 0, kB0, kW1, kB1, kHead0W, kHead0B, kHead1W, kHead1B };

void add_trunk(ad::Params& p, std::size_t in, std::size_t hidden, Rng& rng) {
  p.add("w0", linear_init_weight(in, hidden, rng));
  p.add("b0", linear_init_bias(in, hidden, rng));
  p.add("w1", linear_init_weight(hidden, hidden, rng));
  p.add("b1", linear_init_bias(hidden, hidden, rng));
}

Tensor trunk(Tape& t, const std::vector<Tensor>& p, const Tensor& x) {
  Tensor h0 = ad::tanh_op(t, ad::affine(t, x, p[kW0], p[kB0]));
  return ad::tanh_op(t, ad::affine(t, h0, p[kW1], p[kB1]));
}

constexpr double kHalfLog2Pi = 0.91893853320467274178;  // 0.5*log(2*pi)

}  // namespace detail

using detail::kB0;
using detail::kB1;
using detail::kHead0B;
using detail::kHead0W;
using detail::kHead1B;
using detail::kHead1W;
using detail::kW0;
using detail::kW1;

// ---------------------------------------------------------------------------
// PolicyNet

PolicyNet::PolicyNet(std::size_t obs_dim, std::size_t latent_dim, std::size_t action_dim,
                     std::size_t hidden, Rng& rng)
    : obs_dim_(obs_dim), latent_dim_(latent_dim), action_dim_(action_dim), hidden_(hidden) {
  detail::add_trunk(params_, obs_dim + latent_dim, hidden, rng);
  params_.add("wm", detail::linear_init_weight(hidden, action_dim, rng));
  params_.add("bm", detail::linear_init_bias(hidden, action_dim, rng));
  params_.add("ws", detail::linear_init_weight(hidden, action_dim, rng));
  params_.add("bs", detail::linear_init_bias(hidden, action_dim, rng));
}

PolicyNet PolicyNet::from_params(ad::Params params, std::size_t latent_dim) {
  PolicyNet net;
  net.hidden_ = params.at("w0").shape[1];
  net.action_dim_ = params.at("wm").shape[1];
  net.latent_dim_ = latent_dim;
  net.obs_dim_ = params.at("w0").shape[0] - latent_dim;
  net.params_ = std::move(params);
  return net;
}

PolicyNet::Dist PolicyNet::dist(Tape& t, const std::vector<Tensor>& p, const Tensor& s,
                                const Tensor& z) const {
  Tensor x = ad::concat(t, s, z);
  Tensor h = detail::trunk(t, p, x);
  Tensor f = ad::affine(t, h, p[kHead0W], p[kHead0B]);
  Tensor log_std = ad::clamp(t, ad::affine(t, h, p[kHead1W], p[kHead1B]), kLogStdMin, kLogStdMax);
  return {std::move(f), std::move(log_std)};
}

PolicyNet::Sample PolicyNet::sample(Tape& t, const std::vector<Tensor>& p, const Tensor& s,
                                    const Tensor& z, const Tensor& eps) const {
  Dist d = dist(t, p, s, z);
  Tensor sigma = ad::exp_op(t, d.log_std);
  Tensor u = ad::add(t, d.mean, ad::mul(t, sigma, eps));
  Tensor a = ad::tanh_op(t, u);

  // log N(u | f, sigma) with u - f = sigma*eps substituted: the eps^2 term is
  // constant, the full parameter gradient still matches the density gradient.
  Tensor per_dim = ad::add_scalar(
      t, ad::add(t, ad::scale(t, ad::square(t, eps), -0.5), ad::neg(t, d.log_std)),
      -detail::kHalfLog2Pi);
  Tensor gauss = ad::row_sum(t, per_dim);

  // tanh change of variables: -sum log(1 - a^2 + eps_guard)
  Tensor one_minus_a2 =
      ad::add_scalar(t, ad::neg(t, ad::square(t, a)), 1.0 + kSquashEps);
  Tensor correction = ad::row_sum(t, ad::log_op(t, one_minus_a2));

  return {std::move(a), ad::sub(t, gauss, correction)};
}

Tensor PolicyNet::mean_action(Tape& t, const std::vector<Tensor>& p, const Tensor& s,
                              const Tensor& z) const {
  Tensor x = ad::concat(t, s, z);
  Tensor h = detail::trunk(t, p, x);
  return ad::tanh_op(t, ad::affine(t, h, p[kHead0W], p[kHead0B]));
}

std::vector<double> PolicyNet::act_stochastic(std::span<const double> obs,
                                              std::span<const double> z, Rng& rng,
                                              double* log_prob) const {
  Tape t;
  auto p = track(t, false);
  Tensor eps = Tensor::zeros({action_dim_});
  rng.fill_normal(eps.data);
  Sample s = sample(t, p, Tensor::row({obs.begin(), obs.end()}),
                    Tensor::row({z.begin(), z.end()}), eps);
  if (log_prob != nullptr) *log_prob = s.log_prob.data[0];
  return s.action.data;
}

std::vector<double> PolicyNet::act_mean(std::span<const double> obs, std::span<const double> z,
                                        double* log_prob) const {
  Tape t;
  auto p = track(t, false);
  if (log_prob == nullptr) {
    Tensor a = mean_action(t, p, Tensor::row({obs.begin(), obs.end()}),
                           Tensor::row({z.begin(), z.end()}));
    return a.data;
  }
  Sample s = sample(t, p, Tensor::row({obs.begin(), obs.end()}),
                    Tensor::row({z.begin(), z.end()}), Tensor::zeros({action_dim_}));
  *log_prob = s.log_prob.data[0];
  return s.action.data;
}

// ---------------------------------------------------------------------------
// EncoderNet

EncoderNet::EncoderNet(std::size_t context_dim, std::size_t latent_dim, std::size_t hidden,
                       double delta, Rng& rng)
    : context_dim_(context_dim), latent_dim_(latent_dim), hidden_(hidden), delta_(delta) {
  detail::add_trunk(params_, context_dim, hidden, rng);
  params_.add("wg", detail::linear_init_weight(hidden, latent_dim, rng));
  params_.add("bg", detail::linear_init_bias(hidden, latent_dim, rng));
}

EncoderNet EncoderNet::from_params(ad::Params params, double delta) {
  EncoderNet net;
  net.context_dim_ = params.at("w0").shape[0];
  net.hidden_ = params.at("w0").shape[1];
  net.latent_dim_ = params.at("wg").shape[1];
  net.delta_ = delta;
  net.params_ = std::move(params);
  return net;
}

Tensor EncoderNet::mean(Tape& t, const std::vector<Tensor>& p, const Tensor& c) const {
  Tensor h = detail::trunk(t, p, c);
  return ad::affine(t, h, p[kHead0W], p[kHead0B]);
}

Tensor EncoderNet::sample(Tape& t, const std::vector<Tensor>& p, const Tensor& c,
                          const Tensor& omega) const {
  return ad::add(t, mean(t, p, c), ad::scale(t, omega, delta_));
}

Tensor EncoderNet::kl(Tape& t, const std::vector<Tensor>& p, const Tensor& c,
                      double prior_sigma) const {
  // Per dim: log(sigma/delta) + (delta^2 + g^2) / (2 sigma^2) - 1/2
  const double s2 = prior_sigma * prior_sigma;
  const double constant =
      std::log(prior_sigma / delta_) + delta_ * delta_ / (2.0 * s2) - 0.5;
  Tensor g = mean(t, p, c);
  return ad::row_sum(t, ad::add_scalar(t, ad::scale(t, ad::square(t, g), 1.0 / (2.0 * s2)),
                                       constant));
}

std::vector<double> EncoderNet::encode_mean(std::span<const double> c) const {
  Tape t;
  auto p = track(t, false);
  return mean(t, p, Tensor::row({c.begin(), c.end()})).data;
}

std::vector<double> EncoderNet::encode_sample(std::span<const double> c, Rng& rng) const {
  std::vector<double> z = encode_mean(c);
  for (double& v : z) v += delta_ * rng.normal();
  return z;
}

double EncoderNet::log_ratio(std::span<const double> z, std::span<const double> c,
                             double prior_sigma) const {
  std::vector<double> g = encode_mean(c);
  double acc = 0.0;
  for (std::size_t i = 0; i < z.size(); ++i) {
    const double dq = (z[i] - g[i]) / delta_;
    const double dp = z[i] / prior_sigma;
    acc += -std::log(delta_) - 0.5 * dq * dq + std::log(prior_sigma) + 0.5 * dp * dp;
  }
  return acc;
}

// ---------------------------------------------------------------------------
// QNet

QNet::QNet(std::size_t obs_dim, std::size_t action_dim, std::size_t context_dim,
           std::size_t hidden, Rng& rng)
    : obs_dim_(obs_dim), action_dim_(action_dim), context_dim_(context_dim), hidden_(hidden) {
  detail::add_trunk(params_, obs_dim + action_dim + context_dim, hidden, rng);
  params_.add("wq", detail::linear_init_weight(hidden, 1, rng));
  params_.add("bq", detail::linear_init_bias(hidden, 1, rng));
}

QNet QNet::from_params(ad::Params params, std::size_t obs_dim, std::size_t action_dim) {
  QNet net;
  net.obs_dim_ = obs_dim;
  net.action_dim_ = action_dim;
  net.hidden_ = params.at("w0").shape[1];
  net.context_dim_ = params.at("w0").shape[0] - obs_dim - action_dim;
  net.params_ = std::move(params);
  return net;
}

Tensor QNet::forward(Tape& t, const std::vector<Tensor>& p, const Tensor& s, const Tensor& a,
                     const Tensor& c) const {
  Tensor x = ad::concat(t, ad::concat(t, s, a), c);
  Tensor h = detail::trunk(t, p, x);
  return ad::affine(t, h, p[kHead0W], p[kHead0B]);
}

double QNet::value(std::span<const double> s, std::span<const double> a,
                   std::span<const double> c) const {
  Tape t;
  auto p = track(t, false);
  return forward(t, p, Tensor::row({s.begin(), s.end()}), Tensor::row({a.begin(), a.end()}),
                 Tensor::row({c.begin(), c.end()}))
      .data[0];
}

// ---------------------------------------------------------------------------

double tanh_gaussian_log_prob(std::span<const double> action, std::span<const double> mean,
                              std::span<const double> log_std) {
  double acc = 0.0;
  for (std::size_t i = 0; i < action.size(); ++i) {
    const double a = std::clamp(action[i], -1.0 + 1e-12, 1.0 - 1e-12);
    const double u = 0.5 * std::log((1.0 + a) / (1.0 - a));  // atanh
    const double sigma = std::exp(log_std[i]);
    const double d = (u - mean[i]) / sigma;
    acc += -0.5 * d * d - log_std[i] - detail::kHalfLog2Pi;
    acc -= std::log(1.0 - a * a + PolicyNet::kSquashEps);
  }
  return acc;
}

double gaussian_kl_diag(std::span<const double> mean, double std_q, double std_p) {
  double acc = 0.0;
  const double s2 = std_p * std_p;
  for (double g : mean) {
    acc += std::log(std_p / std_q) + (std_q * std_q + g * g) / (2.0 * s2) - 0.5;
  }
  return acc;
}

}  // namespace mpf::nets
