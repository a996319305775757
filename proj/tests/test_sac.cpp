#include <cmath>
#include <cstring>

#include "doctest.h"
#include "fd_check.hpp"
#include "mpf/line_runner.hpp"
#include "mpf/sac.hpp"
#include "toy_envs.hpp"

using namespace mpf;
using ad::Tape;
using ad::Tensor;

namespace {

sac::CandidatePolicy tiny_candidate(std::size_t obs, std::size_t act, std::size_t ctx,
                                    std::size_t hidden, std::uint64_t seed) {
  Rng rng(seed);
  sac::CandidatePolicy cand;
  cand.policy = nets::PolicyNet(obs, 1, act, hidden, rng);
  cand.encoder = nets::EncoderNet(ctx, 1, hidden, 0.01, rng);
  cand.q1 = nets::QNet(obs, act, ctx, hidden, rng);
  cand.q2 = nets::QNet(obs, act, ctx, hidden, rng);
  cand.q1t = cand.q1;
  cand.q2t = cand.q2;
  cand.alpha.add("alpha_log", Tensor::scalar(std::log(0.2)));
  return cand;
}

struct LossFixture {
  LossFixture() : cand(tiny_candidate(2, 1, 1, 8, 5)), noise(17) {
    n = 4;
    s = random_mat(n, 2);
    a = random_mat(n, 1);
    sp = random_mat(n, 2);
    c = random_mat(n, 1);
    eps = random_mat(n, 1);
    omega = random_mat(n, 1);
  }

  Tensor random_mat(std::size_t r, std::size_t cdim) {
    Tensor t = Tensor::zeros({r, cdim});
    for (double& v : t.data) v = noise.uniform(-1.0, 1.0);
    return t;
  }

  sac::CandidatePolicy cand;
  Rng noise;
  std::size_t n;
  Tensor s, a, sp, c, eps, omega;
};

}  // namespace

TEST_CASE("v_bar") {
  LossFixture fx;
  const double alpha = 0.3;

  SUBCASE("identical twin targets make the min either one") {
    fx.cand.q2t = fx.cand.q1t;
    Tape t;
    Tensor vb = sac::v_bar(t, fx.cand, fx.sp, fx.c, alpha, fx.eps, fx.omega);
    Tape t1;
    auto pe = fx.cand.encoder.track(t1, false);
    auto pp = fx.cand.policy.track(t1, false);
    auto p1 = fx.cand.q1t.track(t1, false);
    Tensor z = fx.cand.encoder.sample(t1, pe, fx.c, fx.omega);
    auto smp = fx.cand.policy.sample(t1, pp, fx.sp, z, fx.eps);
    Tensor q1v = fx.cand.q1t.forward(t1, p1, fx.sp, smp.action, fx.c);
    for (std::size_t i = 0; i < fx.n; ++i) {
      CHECK(vb.data[i] ==
            doctest::Approx(q1v.data[i] - alpha * smp.log_prob.data[i]).epsilon(1e-12));
    }
  }
  SUBCASE("alpha = 0 reduces to the min of the targets") {
    Rng r2(9);
    fx.cand.q2t = nets::QNet(2, 1, 1, 8, r2);  // make the twins differ
    Tape t;
    Tensor vb = sac::v_bar(t, fx.cand, fx.sp, fx.c, 0.0, fx.eps, fx.omega);
    // scalar oracle: recompute per sample with plain forward passes
    for (std::size_t i = 0; i < fx.n; ++i) {
      std::vector<double> ci{fx.c.data[i]};
      std::vector<double> spi{fx.sp.data[2 * i], fx.sp.data[2 * i + 1]};
      std::vector<double> g = fx.cand.encoder.encode_mean(ci);
      const double zi = g[0] + 0.01 * fx.omega.data[i];
      Tape tt;
      auto pp = fx.cand.policy.track(tt, false);
      auto smp = fx.cand.policy.sample(tt, pp, Tensor::row({spi[0], spi[1]}),
                                       Tensor::row({zi}), Tensor::row({fx.eps.data[i]}));
      const double q1v = fx.cand.q1t.value(spi, smp.action.data, ci);
      const double q2v = fx.cand.q2t.value(spi, smp.action.data, ci);
      CHECK(vb.data[i] == doctest::Approx(std::min(q1v, q2v)).epsilon(1e-10));
    }
  }
  SUBCASE("two-sample tabular case against a scalar oracle") {
    Rng r2(9);
    fx.cand.q2t = nets::QNet(2, 1, 1, 8, r2);
    const double a0 = 0.7;
    Tape t;
    Tensor vb = sac::v_bar(t, fx.cand, fx.sp, fx.c, a0, fx.eps, fx.omega);
    for (std::size_t i = 0; i < fx.n; ++i) {
      std::vector<double> ci{fx.c.data[i]};
      std::vector<double> spi{fx.sp.data[2 * i], fx.sp.data[2 * i + 1]};
      std::vector<double> g = fx.cand.encoder.encode_mean(ci);
      const double zi = g[0] + 0.01 * fx.omega.data[i];
      Tape tt;
      auto pp = fx.cand.policy.track(tt, false);
      auto smp = fx.cand.policy.sample(tt, pp, Tensor::row({spi[0], spi[1]}),
                                       Tensor::row({zi}), Tensor::row({fx.eps.data[i]}));
      const double expected = std::min(fx.cand.q1t.value(spi, smp.action.data, ci),
                                       fx.cand.q2t.value(spi, smp.action.data, ci)) -
                              a0 * smp.log_prob.data[0];
      CHECK(vb.data[i] == doctest::Approx(expected).epsilon(1e-10));
    }
  }
}

TEST_CASE("q loss") {
  LossFixture fx;

  SUBCASE("zero when both critics hit the target exactly") {
    fx.cand.q2 = fx.cand.q1;
    Tape t;
    auto p1 = fx.cand.q1.track(t, true);
    auto p2 = fx.cand.q2.track(t, true);
    Tensor y1 = fx.cand.q1.forward(t, p1, fx.s, fx.a, fx.c);
    Tensor loss = sac::q_loss(t, fx.cand.q1, p1, fx.cand.q2, p2, fx.s, fx.a, fx.c,
                              Tensor(y1.shape, y1.data));
    CHECK(loss.value() == doctest::Approx(0.0).epsilon(1e-15));
  }
  SUBCASE("done transitions drop the bootstrap term") {
    Tape t;
    Tensor vb = sac::v_bar(t, fx.cand, fx.sp, fx.c, 0.2, fx.eps, fx.omega);
    Tensor r = fx.random_mat(fx.n, 1);
    Tensor not_done = Tensor::zeros({fx.n, 1});  // all terminal
    Tensor y = Tensor::zeros({fx.n, 1});
    for (std::size_t i = 0; i < fx.n; ++i) {
      y.data[i] = r.data[i] + 0.99 * not_done.data[i] * vb.data[i];
      CHECK(y.data[i] == r.data[i]);
    }
  }
  SUBCASE("gradient matches finite differences") {
    Rng r2(31);
    fx.cand.q2 = nets::QNet(2, 1, 1, 8, r2);
    Tensor y = fx.random_mat(fx.n, 1);
    auto eval = [&] {
      Tape t;
      auto p1 = fx.cand.q1.track(t, true);
      auto p2 = fx.cand.q2.track(t, true);
      return sac::q_loss(t, fx.cand.q1, p1, fx.cand.q2, p2, fx.s, fx.a, fx.c, y).value();
    };
    Tape t;
    auto p1 = fx.cand.q1.track(t, true);
    auto p2 = fx.cand.q2.track(t, true);
    Tensor loss = sac::q_loss(t, fx.cand.q1, p1, fx.cand.q2, p2, fx.s, fx.a, fx.c, y);
    ad::GradMap grads = t.backward(loss);

    test::FdReport r1 = test::fd_check(fx.cand.q1.params(), eval,
                                       fx.cand.q1.params().gather_grads(grads, p1));
    test::FdReport r2r = test::fd_check(fx.cand.q2.params(), eval,
                                        fx.cand.q2.params().gather_grads(grads, p2));
    CHECK(r1.max_rel_err < 1e-4);
    CHECK(r2r.max_rel_err < 1e-4);
  }
}

TEST_CASE("policy/encoder loss") {
  LossFixture fx;
  const double alpha = 0.2, beta = std::exp(-5.0);

  sac::CriticFn critic = [&](Tape& t, const Tensor& s, const Tensor& a,
                             const Tensor& c) -> Tensor {
    auto p1 = fx.cand.q1.track(t, false);
    auto p2 = fx.cand.q2.track(t, false);
    Tensor q1v = fx.cand.q1.forward(t, p1, s, a, c);
    return ad::minimum(t, q1v, fx.cand.q2.forward(t, p2, s, a, c));
  };

  SUBCASE("gradients for psi and eta match finite differences") {
    auto eval = [&] {
      Tape t;
      auto pp = fx.cand.policy.track(t, true);
      auto pe = fx.cand.encoder.track(t, true);
      return sac::policy_encoder_loss(t, fx.cand.policy, pp, fx.cand.encoder, pe, fx.s, fx.c,
                                      fx.eps, fx.omega, alpha, beta, 1.0, critic)
          .value();
    };
    Tape t;
    auto pp = fx.cand.policy.track(t, true);
    auto pe = fx.cand.encoder.track(t, true);
    Tensor loss = sac::policy_encoder_loss(t, fx.cand.policy, pp, fx.cand.encoder, pe, fx.s,
                                           fx.c, fx.eps, fx.omega, alpha, beta, 1.0, critic);
    ad::GradMap grads = t.backward(loss);
    test::FdReport rp = test::fd_check(fx.cand.policy.params(), eval,
                                       fx.cand.policy.params().gather_grads(grads, pp));
    test::FdReport re = test::fd_check(fx.cand.encoder.params(), eval,
                                       fx.cand.encoder.params().gather_grads(grads, pe));
    CHECK(rp.max_rel_err < 1e-4);
    CHECK(re.max_rel_err < 1e-4);
  }

  SUBCASE("huge beta drives the encoder mean toward zero") {
    Rng rng(3);
    ad::AdamState adam(fx.cand.encoder.params(), {.lr = 3e-3});
    const double before = std::abs(fx.cand.encoder.encode_mean(std::vector<double>{0.8})[0]);
    for (int i = 0; i < 400; ++i) {
      Tape t;
      auto pp = fx.cand.policy.track(t, false);  // frozen policy
      auto pe = fx.cand.encoder.track(t, true);
      Tensor eps = fx.random_mat(fx.n, 1);
      Tensor omega = fx.random_mat(fx.n, 1);
      Tensor loss = sac::policy_encoder_loss(t, fx.cand.policy, pp, fx.cand.encoder, pe, fx.s,
                                             fx.c, eps, omega, alpha, 1e4, 1.0, critic);
      ad::GradMap grads = t.backward(loss);
      adam.step(fx.cand.encoder.params(), fx.cand.encoder.params().gather_grads(grads, pe));
    }
    const double after = std::abs(fx.cand.encoder.encode_mean(std::vector<double>{0.8})[0]);
    CHECK(after < 0.05);
    CHECK(after < before + 1e-9);
  }

  SUBCASE("hand-fixed quadratic critic pulls the policy mean to zero") {
    // Q(s, a) = -a^2: the soft-optimal squashed mean sits at tanh^{ -1 }
    // neighborhood of 0.
    sac::CriticFn quad = [](Tape& t, const Tensor&, const Tensor& a, const Tensor&) -> Tensor {
      return ad::neg(t, ad::row_sum(t, ad::square(t, a)));
    };
    Rng rng(5);
    ad::AdamState adam(fx.cand.policy.params(), {.lr = 3e-3});
    for (int i = 0; i < 600; ++i) {
      Tape t;
      auto pp = fx.cand.policy.track(t, true);
      auto pe = fx.cand.encoder.track(t, false);
      Tensor eps = fx.random_mat(fx.n, 1);
      Tensor omega = fx.random_mat(fx.n, 1);
      Tensor loss = sac::policy_encoder_loss(t, fx.cand.policy, pp, fx.cand.encoder, pe, fx.s,
                                             fx.c, eps, omega, 0.05, beta, 1.0, quad);
      ad::GradMap grads = t.backward(loss);
      adam.step(fx.cand.policy.params(), fx.cand.policy.params().gather_grads(grads, pp));
    }
    std::vector<double> g = fx.cand.encoder.encode_mean(std::vector<double>{fx.c.data[0]});
    std::vector<double> a =
        fx.cand.policy.act_mean(std::vector<double>{fx.s.data[0], fx.s.data[1]}, std::vector<double>{g[0]});
    CHECK(std::abs(a[0]) < 0.1);
  }
}

TEST_CASE("alpha loss") {
  SUBCASE("policy entropy exactly at the target gives zero gradient") {
    Tape t;
    Tensor alpha_log = t.leaf(Tensor::scalar(std::log(0.5)));
    Tensor neg = Tensor::zeros({4, 1});  // -log pi - H_bar == 0 per sample
    Tensor loss = sac::alpha_loss(t, alpha_log, neg);
    ad::GradMap grads = t.backward(loss);
    CHECK(grads.at(alpha_log.node).data[0] == doctest::Approx(0.0));
  }
  SUBCASE("entropy above target decreases alpha") {
    ad::Params p;
    p.add("alpha_log", Tensor::scalar(std::log(0.5)));
    ad::AdamState adam(p, {.lr = 1e-2});
    Tensor neg = Tensor::full({4, 1}, 0.7);  // entropy estimate above target
    Tape t;
    Tensor leaf = t.leaf(p.at("alpha_log"));
    Tensor loss = sac::alpha_loss(t, leaf, neg);
    ad::GradMap grads = t.backward(loss);
    adam.step(p, p.gather_grads(grads, {leaf}));
    CHECK(p.at("alpha_log").value() < std::log(0.5));
  }
  SUBCASE("fixed-entropy synthetic policy: alpha decays geometrically (scalar oracle)") {
    // Module path
    ad::Params p;
    p.add("alpha_log", Tensor::scalar(0.0));
    const ad::AdamConfig acfg{.lr = 5e-3};
    ad::AdamState adam(p, acfg);
    const double gap = 0.8;  // constant (-log pi - H_bar)
    std::vector<double> module_alphas;
    for (int i = 0; i < 400; ++i) {
      Tape t;
      Tensor leaf = t.leaf(p.at("alpha_log"));
      Tensor loss = sac::alpha_loss(t, leaf, Tensor::full({8, 1}, gap));
      ad::GradMap grads = t.backward(loss);
      adam.step(p, p.gather_grads(grads, {leaf}));
      module_alphas.push_back(std::exp(p.at("alpha_log").value()));
    }
    // Scalar oracle: Adam recursion on d/dlog_a [e^{log_a} * gap]
    double log_a = 0.0, m = 0.0, v = 0.0;
    std::vector<double> oracle_alphas;
    for (int i = 1; i <= 400; ++i) {
      const double g = std::exp(log_a) * gap;
      m = acfg.beta1 * m + (1 - acfg.beta1) * g;
      v = acfg.beta2 * v + (1 - acfg.beta2) * g * g;
      const double mhat = m / (1 - std::pow(acfg.beta1, i));
      const double vhat = v / (1 - std::pow(acfg.beta2, i));
      log_a -= acfg.lr * mhat / (std::sqrt(vhat) + acfg.eps);
      oracle_alphas.push_back(std::exp(log_a));
    }
    for (std::size_t i = 0; i < oracle_alphas.size(); ++i) {
      CHECK(module_alphas[i] == doctest::Approx(oracle_alphas[i]).epsilon(1e-10));
    }
    // geometric decay: per-step ratio stays below one, drifts slowly, and the
    // cumulative decay is exponential in the step count
    const double ratio_early = module_alphas[50] / module_alphas[49];
    const double ratio_late = module_alphas[350] / module_alphas[349];
    CHECK(ratio_early < 1.0);
    CHECK(ratio_late < 1.0);
    CHECK(ratio_early == doctest::Approx(std::exp(-acfg.lr)).epsilon(2e-3));
    CHECK(std::abs(ratio_late - module_alphas[351] / module_alphas[350]) < 1e-4);
    CHECK(module_alphas[399] < std::exp(-0.3 * acfg.lr * 400.0));
  }
}

TEST_CASE("polyak update") {
  Rng rng(19);
  nets::QNet online(1, 1, 1, 4, rng);
  nets::QNet target(1, 1, 1, 4, rng);

  SUBCASE("tau = 1 copies exactly") {
    sac::polyak_update(target.params(), online.params(), 1.0);
    for (std::size_t i = 0; i < online.params().size(); ++i) {
      CHECK(target.params().value(i).data == online.params().value(i).data);
    }
  }
  SUBCASE("tau = 0 is rejected") {
    CHECK_THROWS_AS(sac::polyak_update(target.params(), online.params(), 0.0), ConfigError);
  }
  SUBCASE("repeated updates converge geometrically with ratio (1 - tau)") {
    const double tau = 0.1;
    const double w0 = online.params().value(0).data[0];
    double prev_gap = std::abs(target.params().value(0).data[0] - w0);
    for (int i = 0; i < 20; ++i) {
      sac::polyak_update(target.params(), online.params(), tau);
      const double gap = std::abs(target.params().value(0).data[0] - w0);
      CHECK(gap == doctest::Approx(prev_gap * (1.0 - tau)).epsilon(1e-9));
      prev_gap = gap;
    }
  }
}

TEST_CASE("replay buffer FIFO") {
  sac::ReplayBuffer buf(8, 1, 1, 1);
  for (int i = 0; i < 11; ++i) {
    const double v = static_cast<double>(i);
    buf.push(std::vector<double>{v}, std::vector<double>{0.0}, v, std::vector<double>{v},
             std::vector<double>{0.0}, false);
  }
  CHECK(buf.size() == 8);
  // oldest 3 of 11 pushes (0, 1, 2) evicted
  CHECK(buf.get(0).r == 3.0);
  CHECK(buf.get(7).r == 10.0);
  for (std::size_t i = 0; i < buf.size(); ++i) {
    CHECK(buf.get(i).r >= 3.0);
  }
}

TEST_CASE("train_foundation") {
  SUBCASE("update ordering matches the algorithm line sequence") {
    test::TabularCmdpEnv env;
    sac::TrainConfig cfg;
    cfg.epochs = 2;
    cfg.collect_steps = 64;
    cfg.update_iters = 3;
    cfg.batch = 16;
    cfg.hidden = 8;
    cfg.encoder_hidden = 8;
    cfg.buffer_capacity = 1000;
    cfg.seed = 1;
    std::vector<std::string> seq;
    sac::UpdateHook hook = [&](std::string_view what) { seq.emplace_back(what); };
    (void)sac::train_foundation(env, cfg, nullptr, hook);
    REQUIRE(seq.size() == 2 * 3 * 5);
    for (std::size_t i = 0; i < seq.size(); i += 5) {
      CHECK(seq[i + 0] == "policy");
      CHECK(seq[i + 1] == "encoder");
      CHECK(seq[i + 2] == "q");
      CHECK(seq[i + 3] == "alpha");
      CHECK(seq[i + 4] == "target");
    }
  }

  SUBCASE("seeded runs are bit-reproducible") {
    auto run = [] {
      test::TabularCmdpEnv env;
      sac::TrainConfig cfg;
      cfg.epochs = 2;
      cfg.collect_steps = 64;
      cfg.update_iters = 4;
      cfg.batch = 16;
      cfg.hidden = 8;
      cfg.encoder_hidden = 8;
      cfg.buffer_capacity = 1000;
      cfg.seed = 7;
      std::vector<sac::EpochLog> log;
      sac::CandidatePolicy cand = sac::train_foundation(env, cfg, &log);
      std::vector<double> out;
      for (std::size_t i = 0; i < cand.policy.params().size(); ++i) {
        const auto& d = cand.policy.params().value(i).data;
        out.insert(out.end(), d.begin(), d.end());
      }
      out.push_back(cand.alpha_value());
      for (const auto& row : log) {
        out.push_back(row.q_loss);
        out.push_back(row.mean_entropy);
      }
      return out;
    };
    std::vector<double> a = run();
    std::vector<double> b = run();
    REQUIRE(a.size() == b.size());
    for (std::size_t i = 0; i < a.size(); ++i) {
      CHECK(std::memcmp(&a[i], &b[i], sizeof(double)) == 0);
    }
  }

  SUBCASE("alpha stays positive and the target gap shrinks under frozen critics") {
    test::TabularCmdpEnv env;
    sac::TrainConfig cfg;
    cfg.epochs = 3;
    cfg.collect_steps = 64;
    cfg.update_iters = 8;
    cfg.batch = 16;
    cfg.hidden = 8;
    cfg.encoder_hidden = 8;
    cfg.buffer_capacity = 1000;
    cfg.seed = 3;
    std::vector<sac::EpochLog> log;
    sac::CandidatePolicy cand = sac::train_foundation(env, cfg, &log);
    for (const auto& row : log) CHECK(row.alpha > 0.0);

    // target lag: ||q1t - q1|| decreases when q1 is frozen
    auto gap = [&] {
      double acc = 0.0;
      for (std::size_t i = 0; i < cand.q1.params().size(); ++i) {
        const auto& a = cand.q1.params().value(i).data;
        const auto& b = cand.q1t.params().value(i).data;
        for (std::size_t j = 0; j < a.size(); ++j) acc += (a[j] - b[j]) * (a[j] - b[j]);
      }
      return std::sqrt(acc);
    };
    double prev = gap();
    CHECK(prev > 0.0);
    for (int i = 0; i < 5; ++i) {
      sac::polyak_update(cand.q1t.params(), cand.q1.params(), 0.1);
      const double now = gap();
      CHECK(now < prev);
      prev = now;
    }
  }
}
