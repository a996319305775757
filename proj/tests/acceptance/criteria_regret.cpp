#include <algorithm>
#include <atomic>
#include <cmath>
#include <functional>
#include <thread>

#include "criteria.hpp"
#include "mpf/line_runner.hpp"
#include "mpf/sac.hpp"
#include "mpf/selection.hpp"
#include "mpf/tpe.hpp"

namespace mpf::acceptance {

// Criterion 7: bootstrap top-one regret over 25 short-budget candidates,
// N=1000 pools of size 5 sampled with replacement. The index-based selection
// must beat random selection with 95% bootstrap confidence on the mean
// per-pool regret difference.
bool criterion_7_selection_regret() {
  Timer timer;
  const std::size_t K = 25;

  // Short budgets amplify seed-to-seed quality spread, which is exactly what
  // the selection index must detect.
  std::vector<sac::CandidatePolicy> candidates(K);
  {
    std::vector<std::function<void()>> tasks;
    for (std::size_t k = 0; k < K; ++k) {
      tasks.push_back([&candidates, k] {
        envs::LineRunnerEnv env(envs::LineRunnerEnv::Mode::kDir);
        sac::TrainConfig cfg;
        cfg.hidden = 24;
        cfg.encoder_hidden = 12;
        cfg.batch = 128;
        cfg.collect_steps = 600;
        cfg.update_iters = 500;
        cfg.epochs = 5;
        cfg.buffer_capacity = 20000;
        cfg.seed = 700 + k;
        candidates[k] = sac::train_foundation(env, cfg);
        candidates[k].seed = 700 + k;
      });
    }
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
      while (true) {
        const std::size_t i = next.fetch_add(1);
        if (i >= tasks.size()) return;
        tasks[i]();
      }
    };
    std::thread t1(worker), t2(worker);
    t1.join();
    t2.join();
  }

  // Selection index over the fixed context set (both directions).
  std::vector<double> indices(K);
  std::vector<std::uint64_t> seeds(K);
  const std::vector<envs::ContextVector> cset{{1.0}, {-1.0}};
  for (std::size_t k = 0; k < K; ++k) {
    envs::LineRunnerEnv env(envs::LineRunnerEnv::Mode::kDir);
    selection::SelectionConfig sel;
    Rng rng(mix_seed(55, "accept-regret-select-" + std::to_string(k)));
    indices[k] = selection::selection_index(env, candidates[k], cset, sel, rng);
    seeds[k] = candidates[k].seed;
  }

  // Held-out post-generation return per candidate (reduced budget).
  std::vector<double> heldout(K);
  {
    const envs::ContextSpec spec = envs::ContextSpec::builtin("linerunner_dir");
    Rng crng(mix_seed(55, "accept-regret-heldout"));
    std::vector<envs::ContextVector> contexts;
    for (int i = 0; i < 3; ++i) contexts.push_back(envs::sample_heldout_context(spec, crng));

    std::vector<std::function<void()>> tasks;
    for (std::size_t k = 0; k < K; ++k) {
      tasks.push_back([&, k] {
        envs::LineRunnerEnv env(envs::LineRunnerEnv::Mode::kDir);
        double total = 0.0;
        for (std::size_t i = 0; i < contexts.size(); ++i) {
          tpe::GenerationResult res = tpe::skill_generate(
              env, candidates[k], contexts[i], 25, {}, {},
              mix_seed(55, "accept-regret-gen-" + std::to_string(k) + "-" + std::to_string(i)));
          total += res.best.j;
        }
        heldout[k] = total / static_cast<double>(contexts.size());
      });
    }
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
      while (true) {
        const std::size_t i = next.fetch_add(1);
        if (i >= tasks.size()) return;
        tasks[i]();
      }
    };
    std::thread t1(worker), t2(worker);
    t1.join();
    t2.join();
  }

  Rng boot(mix_seed(55, "accept-regret-bootstrap"));
  selection::RegretReport rep =
      selection::top_one_regret(indices, heldout, seeds, 1000, 5, boot);

  // 95% percentile-bootstrap CI on the mean of (random - index) pool regrets.
  std::vector<double> diffs(rep.pools);
  for (std::size_t p = 0; p < rep.pools; ++p) {
    diffs[p] = rep.pool_regret_random[p] - rep.pool_regret_index[p];
  }
  const std::size_t B = 2000;
  std::vector<double> boot_means(B);
  Rng rng2(mix_seed(55, "accept-regret-ci"));
  for (std::size_t b = 0; b < B; ++b) {
    double acc = 0.0;
    for (std::size_t p = 0; p < diffs.size(); ++p) acc += diffs[rng2.index(diffs.size())];
    boot_means[b] = acc / static_cast<double>(diffs.size());
  }
  std::sort(boot_means.begin(), boot_means.end());
  const double ci_lo = boot_means[static_cast<std::size_t>(0.025 * B)];

  const double secs = timer.seconds();
  const bool pass =
      rep.mean_regret_index < rep.mean_regret_random && ci_lo > 0.0 && secs < 1800.0;
  char detail[256];
  std::snprintf(detail, sizeof(detail),
                "selection regret: index %.3f < random %.3f over N=%zu pools of %zu "
                "(bootstrap 95%% CI lower bound on the gap: %.3f > 0), %.0fs",
                rep.mean_regret_index, rep.mean_regret_random, rep.pools, rep.pool_size, ci_lo,
                secs);
  report(7, pass, detail);
  return pass;
}

}  // namespace mpf::acceptance
