#include "mpf/sac.hpp"

#include <cmath>

namespace mpf::sac {

using ad::Tape;
using ad::Tensor;

void TrainConfig::validate() const {
  if (!(gamma > 0.0 && gamma <= 1.0)) throw ConfigError("train config: gamma must be in (0, 1]");
  if (!(tau > 0.0 && tau <= 1.0)) throw ConfigError("train config: tau must be in (0, 1]");
  if (batch == 0 || collect_steps == 0 || epochs == 0) {
    throw ConfigError("train config: batch, collect_steps and epochs must be positive");
  }
  if (batch > collect_steps) {
    throw ConfigError("train config: batch exceeds buffer occupancy at the first update");
  }
  if (buffer_capacity < batch) throw ConfigError("train config: buffer smaller than batch");
  if (hidden == 0 || encoder_hidden == 0 || latent_dim == 0) {
    throw ConfigError("train config: network sizes must be positive");
  }
  if (!(encoder_delta > 0.0) || !(prior_sigma > 0.0)) {
    throw ConfigError("train config: encoder_delta and prior_sigma must be positive");
  }
  if (!(alpha_init > 0.0)) throw ConfigError("train config: alpha_init must be positive");
}

Tensor v_bar(Tape& t, const CandidatePolicy& cand, const Tensor& sp, const Tensor& c,
             double alpha, const Tensor& eps, const Tensor& omega) {
  auto pe = cand.encoder.track(t, false);
  auto pp = cand.policy.track(t, false);
  auto p1 = cand.q1t.track(t, false);
  auto p2 = cand.q2t.track(t, false);

  Tensor z = cand.encoder.sample(t, pe, c, omega);
  auto s = cand.policy.sample(t, pp, sp, z, eps);
  Tensor q1v = cand.q1t.forward(t, p1, sp, s.action, c);
  Tensor q2v = cand.q2t.forward(t, p2, sp, s.action, c);
  Tensor qmin = ad::minimum(t, q1v, q2v);
  return ad::sub(t, qmin, ad::scale(t, s.log_prob, alpha));
}

Tensor q_loss(Tape& t, const nets::QNet& q1, const std::vector<Tensor>& p1, const nets::QNet& q2,
              const std::vector<Tensor>& p2, const Tensor& s, const Tensor& a, const Tensor& c,
              const Tensor& y) {
  Tensor d1 = ad::sub(t, q1.forward(t, p1, s, a, c), y);
  Tensor d2 = ad::sub(t, q2.forward(t, p2, s, a, c), y);
  return ad::mean(t, ad::add(t, ad::square(t, d1), ad::square(t, d2)));
}

Tensor policy_encoder_loss(Tape& t, const nets::PolicyNet& policy, const std::vector<Tensor>& pp,
                           const nets::EncoderNet& encoder, const std::vector<Tensor>& pe,
                           const Tensor& s, const Tensor& c, const Tensor& eps,
                           const Tensor& omega, double alpha, double beta, double prior_sigma,
                           const CriticFn& critic) {
  Tensor z = encoder.sample(t, pe, c, omega);
  auto sample = policy.sample(t, pp, s, z, eps);
  Tensor q = critic(t, s, sample.action, c);
  Tensor actor = ad::mean(t, ad::sub(t, ad::scale(t, sample.log_prob, alpha), q));
  Tensor kl = ad::mean(t, encoder.kl(t, pe, c, prior_sigma));
  return ad::add(t, actor, ad::scale(t, kl, beta));
}

Tensor alpha_loss(Tape& t, const Tensor& alpha_log_leaf, const Tensor& neg_logp_minus_target) {
  // alpha is shared across the batch, so it factors out of the mean.
  return ad::mul(t, ad::exp_op(t, alpha_log_leaf), ad::mean(t, neg_logp_minus_target));
}

void polyak_update(ad::Params& target, const ad::Params& online, double tau) {
  if (!(tau > 0.0 && tau <= 1.0)) throw ConfigError("polyak: tau must be in (0, 1]");
  if (target.size() != online.size()) throw ShapeError("polyak: bundle sizes differ");
  for (std::size_t i = 0; i < target.size(); ++i) {
    Tensor& tv = target.value(i);
    const Tensor& ov = online.value(i);
    if (!ad::same_shape(tv.shape, ov.shape)) {
      throw ShapeError("polyak: parameter " + target.name(i) + " shape " +
                       ad::shape_str(tv.shape) + " vs " + ad::shape_str(ov.shape));
    }
    for (std::size_t j = 0; j < tv.data.size(); ++j) {
      tv.data[j] = tau * ov.data[j] + (1.0 - tau) * tv.data[j];
    }
  }
}

namespace {

Tensor normal_tensor(ad::Shape shape, Rng& rng) {
  Tensor t = Tensor::zeros(std::move(shape));
  rng.fill_normal(t.data);
  return t;
}

}  // namespace

CandidatePolicy train_foundation(envs::Env& env, const TrainConfig& cfg,
                                 std::vector<EpochLog>* log, const UpdateHook& hook,
                                 const EpochCallback& epoch_cb) {
  cfg.validate();
  const std::size_t obs_dim = env.obs_dim();
  const std::size_t act_dim = env.action_dim();
  const std::size_t ctx_dim = env.context_spec().size();
  const double target_entropy =
      std::isnan(cfg.target_entropy) ? -static_cast<double>(act_dim) : cfg.target_entropy;

  Rng rng(cfg.seed);
  CandidatePolicy cand;
  cand.seed = cfg.seed;
  cand.policy = nets::PolicyNet(obs_dim, cfg.latent_dim, act_dim, cfg.hidden, rng);
  cand.encoder =
      nets::EncoderNet(ctx_dim, cfg.latent_dim, cfg.encoder_hidden, cfg.encoder_delta, rng);
  cand.q1 = nets::QNet(obs_dim, act_dim, ctx_dim, cfg.hidden, rng);
  cand.q2 = nets::QNet(obs_dim, act_dim, ctx_dim, cfg.hidden, rng);
  cand.q1t = cand.q1;
  cand.q2t = cand.q2;
  cand.alpha.add("alpha_log", Tensor::scalar(std::log(cfg.alpha_init)));

  ad::AdamState adam_pi(cand.policy.params(), {.lr = cfg.policy_lr});
  ad::AdamState adam_enc(cand.encoder.params(), {.lr = cfg.encoder_lr});
  ad::AdamState adam_q1(cand.q1.params(), {.lr = cfg.q_lr});
  ad::AdamState adam_q2(cand.q2.params(), {.lr = cfg.q_lr});
  ad::AdamState adam_alpha(cand.alpha, {.lr = cfg.alpha_lr});

  ReplayBuffer buffer(cfg.buffer_capacity, obs_dim, act_dim, ctx_dim);

  // Collector state persists across epochs; (c, z) are resampled per episode.
  envs::ContextVector ctx = envs::sample_context(env.context_spec(), rng);
  std::vector<double> z = cand.encoder.encode_sample(ctx, rng);
  std::vector<double> obs = env.reset(ctx, rng.next_u64());
  double episode_return = 0.0;
  double last_mean_return = 0.0;

  std::size_t env_steps = 0;
  auto emit = [&hook](std::string_view what) {
    if (hook) hook(what);
  };

  for (std::size_t epoch = 1; epoch <= cfg.epochs; ++epoch) {
    // -- collect ---------------------------------------------------------
    double return_sum = 0.0;
    std::size_t episodes_done = 0;
    for (std::size_t step = 0; step < cfg.collect_steps; ++step) {
      std::vector<double> action = cand.policy.act_stochastic(obs, z, rng);
      envs::StepResult res = env.step(action);
      // Time-limit endings keep bootstrapping on: only true terminations mark
      // an absorbing state.
      buffer.push(obs, action, res.reward, res.obs, ctx, res.done && !res.truncated);
      episode_return += res.reward;
      obs = std::move(res.obs);
      env_steps += 1;
      if (res.done) {
        return_sum += episode_return;
        episodes_done += 1;
        episode_return = 0.0;
        ctx = envs::sample_context(env.context_spec(), rng);
        z = cand.encoder.encode_sample(ctx, rng);
        obs = env.reset(ctx, rng.next_u64());
      }
    }
    if (episodes_done > 0) last_mean_return = return_sum / static_cast<double>(episodes_done);

    // -- update ----------------------------------------------------------
    double pi_loss_sum = 0.0;
    double q_loss_sum = 0.0;
    double entropy_sum = 0.0;
    const std::size_t batch_n = std::min(cfg.batch, buffer.size());
    const char* where = "";
    try {
      for (std::size_t iter = 0; iter < cfg.update_iters; ++iter) {
        ReplayBuffer::Batch batch = buffer.sample(batch_n, rng);
        const double alpha = cand.alpha_value();

        // policy + encoder (Alg. 1 lines 12-13): one backward, two steps
        where = "policy/encoder loss";
        {
          Tape t;
          auto pp = cand.policy.track(t, true);
          auto pe = cand.encoder.track(t, true);
          Tensor eps = normal_tensor({batch_n, act_dim}, rng);
          Tensor omega = normal_tensor({batch_n, cfg.latent_dim}, rng);
          CriticFn critic = [&](Tape& tt, const Tensor& s, const Tensor& a,
                                const Tensor& c) -> Tensor {
            auto p1 = cand.q1.track(tt, false);
            Tensor q1v = cand.q1.forward(tt, p1, s, a, c);
            if (cfg.single_q_actor) return q1v;
            auto p2 = cand.q2.track(tt, false);
            return ad::minimum(tt, q1v, cand.q2.forward(tt, p2, s, a, c));
          };
          Tensor loss =
              policy_encoder_loss(t, cand.policy, pp, cand.encoder, pe, batch.s, batch.c, eps,
                                  omega, alpha, cfg.beta, cfg.prior_sigma, critic);
          pi_loss_sum += loss.value();
          ad::GradMap grads = t.backward(loss);
          adam_pi.step(cand.policy.params(), cand.policy.params().gather_grads(grads, pp));
          emit("policy");
          adam_enc.step(cand.encoder.params(), cand.encoder.params().gather_grads(grads, pe));
          emit("encoder");
        }

        // twin critics (line 14)
        where = "q loss";
        {
          Tape t;
          Tensor eps = normal_tensor({batch_n, act_dim}, rng);
          Tensor omega = normal_tensor({batch_n, cfg.latent_dim}, rng);
          Tensor vb = v_bar(t, cand, batch.sp, batch.c, alpha, eps, omega);
          Tensor y = Tensor::zeros({batch_n, 1});
          for (std::size_t i = 0; i < batch_n; ++i) {
            y.data[i] = batch.r.data[i] +
                        cfg.gamma * batch.not_done.data[i] * vb.data[i];
          }
          auto p1 = cand.q1.track(t, true);
          auto p2 = cand.q2.track(t, true);
          Tensor loss = q_loss(t, cand.q1, p1, cand.q2, p2, batch.s, batch.a, batch.c, y);
          q_loss_sum += loss.value();
          ad::GradMap grads = t.backward(loss);
          adam_q1.step(cand.q1.params(), cand.q1.params().gather_grads(grads, p1));
          adam_q2.step(cand.q2.params(), cand.q2.params().gather_grads(grads, p2));
          emit("q");
        }

        // temperature (line 15); log-probs are constants w.r.t. alpha
        where = "alpha loss";
        {
          Tape scratch;
          auto pp = cand.policy.track(scratch, false);
          auto pe = cand.encoder.track(scratch, false);
          Tensor eps = normal_tensor({batch_n, act_dim}, rng);
          Tensor omega = normal_tensor({batch_n, cfg.latent_dim}, rng);
          Tensor zb = cand.encoder.sample(scratch, pe, batch.c, omega);
          auto sample = cand.policy.sample(scratch, pp, batch.s, zb, eps);
          Tensor neg = Tensor::zeros({batch_n, 1});
          for (std::size_t i = 0; i < batch_n; ++i) {
            neg.data[i] = -sample.log_prob.data[i] - target_entropy;
            entropy_sum += -sample.log_prob.data[i];
          }
          if (cfg.alpha_autotune) {
            Tape t;
            Tensor alpha_leaf = t.leaf(cand.alpha.at("alpha_log"));
            Tensor loss = alpha_loss(t, alpha_leaf, neg);
            ad::GradMap grads = t.backward(loss);
            adam_alpha.step(cand.alpha, cand.alpha.gather_grads(grads, {alpha_leaf}));
            emit("alpha");
          }
        }

        // lagged targets (line 16)
        where = "target update";
        polyak_update(cand.q1t.params(), cand.q1.params(), cfg.tau);
        polyak_update(cand.q2t.params(), cand.q2.params(), cfg.tau);
        emit("target");
      }
    } catch (const NumericError& e) {
      throw NumericError("train_foundation: epoch " + std::to_string(epoch) + ", " + where +
                         ": " + e.what());
    }

    if (log != nullptr) {
      const double iters = cfg.update_iters > 0 ? static_cast<double>(cfg.update_iters) : 1.0;
      EpochLog row;
      row.epoch = epoch;
      row.env_steps = env_steps;
      row.q_loss = q_loss_sum / iters;
      row.pi_loss = pi_loss_sum / iters;
      row.alpha = cand.alpha_value();
      row.mean_return = last_mean_return;
      row.mean_entropy = entropy_sum / (iters * static_cast<double>(batch_n));
      log->push_back(row);
    }
    if (epoch_cb) epoch_cb(epoch, cand);
    log_debug("epoch " + std::to_string(epoch) + " return " + std::to_string(last_mean_return) +
              " alpha " + std::to_string(cand.alpha_value()));
  }
  return cand;
}

double eval_mean_return(envs::Env& env, const CandidatePolicy& cand,
                        const envs::ContextVector& c, std::size_t episodes, Rng& rng) {
  double total = 0.0;
  std::vector<double> z = cand.encoder.encode_mean(c);
  for (std::size_t ep = 0; ep < episodes; ++ep) {
    std::vector<double> obs = env.reset(c, rng.next_u64());
    double ret = 0.0;
    while (true) {
      std::vector<double> a = cand.policy.act_mean(obs, z);
      envs::StepResult res = env.step(a);
      ret += res.reward;
      obs = std::move(res.obs);
      if (res.done) break;
    }
    total += ret;
  }
  return total / static_cast<double>(episodes);
}

}  // namespace mpf::sac
