#include <pybind11/functional.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "mpf/networks.hpp"
#include "mpf/pipeline.hpp"
#include "mpf/tape.hpp"

namespace py = pybind11;

namespace {

mpf::sac::TrainConfig train_config_from_kwargs(const py::kwargs& kwargs) {
  mpf::sac::TrainConfig cfg;
  for (const auto& item : kwargs) {
    const std::string key = py::cast<std::string>(item.first);
    const py::handle v = item.second;
    if (key == "gamma") cfg.gamma = py::cast<double>(v);
    else if (key == "beta") cfg.beta = py::cast<double>(v);
    else if (key == "tau") cfg.tau = py::cast<double>(v);
    else if (key == "batch") cfg.batch = py::cast<std::size_t>(v);
    else if (key == "collect_steps") cfg.collect_steps = py::cast<std::size_t>(v);
    else if (key == "update_iters") cfg.update_iters = py::cast<std::size_t>(v);
    else if (key == "epochs") cfg.epochs = py::cast<std::size_t>(v);
    else if (key == "q_lr") cfg.q_lr = py::cast<double>(v);
    else if (key == "policy_lr") cfg.policy_lr = py::cast<double>(v);
    else if (key == "encoder_lr") cfg.encoder_lr = py::cast<double>(v);
    else if (key == "alpha_lr") cfg.alpha_lr = py::cast<double>(v);
    else if (key == "target_entropy") cfg.target_entropy = py::cast<double>(v);
    else if (key == "buffer_capacity") cfg.buffer_capacity = py::cast<std::size_t>(v);
    else if (key == "hidden") cfg.hidden = py::cast<std::size_t>(v);
    else if (key == "encoder_hidden") cfg.encoder_hidden = py::cast<std::size_t>(v);
    else if (key == "latent_dim") cfg.latent_dim = py::cast<std::size_t>(v);
    else if (key == "encoder_delta") cfg.encoder_delta = py::cast<double>(v);
    else if (key == "prior_sigma") cfg.prior_sigma = py::cast<double>(v);
    else if (key == "alpha_autotune") cfg.alpha_autotune = py::cast<bool>(v);
    else if (key == "alpha_init") cfg.alpha_init = py::cast<double>(v);
    else if (key == "single_q_actor") cfg.single_q_actor = py::cast<bool>(v);
    else if (key == "seed") cfg.seed = py::cast<std::uint64_t>(v);
    else throw mpf::ConfigError("train_foundation: unknown option '" + key + "'");
  }
  return cfg;
}

}  // namespace

PYBIND11_MODULE(_mpf, m) {
  m.doc() = "Multitask policy foundry: context-conditioned SAC, policy selection by a "
            "KL-regularized return index, and TPE latent search.";

  py::register_exception<mpf::Error>(m, "MpfError");

  py::class_<mpf::envs::ContextSpec>(m, "ContextSpec")
      .def_static("builtin", &mpf::envs::ContextSpec::builtin, py::arg("name"))
      .def_static("from_json_file", &mpf::envs::ContextSpec::from_json_file, py::arg("path"))
      .def_property_readonly("name", [](const mpf::envs::ContextSpec& s) { return s.name; })
      .def_property_readonly("dim_names",
                             [](const mpf::envs::ContextSpec& s) {
                               std::vector<std::string> names;
                               for (const auto& d : s.dims) names.push_back(d.name);
                               return names;
                             })
      .def("sample",
           [](const mpf::envs::ContextSpec& s, std::uint64_t seed) {
             mpf::Rng rng(seed);
             return mpf::envs::sample_context(s, rng);
           },
           py::arg("seed"))
      .def("sample_heldout",
           [](const mpf::envs::ContextSpec& s, std::uint64_t seed, std::size_t count) {
             mpf::Rng rng(seed);
             std::vector<mpf::envs::ContextVector> out;
             for (std::size_t i = 0; i < count; ++i) {
               out.push_back(mpf::envs::sample_heldout_context(s, rng));
             }
             return out;
           },
           py::arg("seed"), py::arg("count") = 1)
      .def("enumerate_discrete", [](const mpf::envs::ContextSpec& s) {
        return mpf::envs::enumerate_discrete_contexts(s);
      });

  py::class_<mpf::envs::Env>(m, "Env")
      .def_property_readonly("obs_dim", &mpf::envs::Env::obs_dim)
      .def_property_readonly("action_dim", &mpf::envs::Env::action_dim)
      .def_property_readonly("horizon", &mpf::envs::Env::horizon)
      .def_property_readonly("name", &mpf::envs::Env::name)
      .def_property_readonly("context_spec", &mpf::envs::Env::context_spec)
      .def("reset", &mpf::envs::Env::reset, py::arg("context"), py::arg("seed") = 0)
      .def("step", [](mpf::envs::Env& env, const std::vector<double>& action) {
        mpf::envs::StepResult r = env.step(action);
        return py::make_tuple(r.obs, r.reward, r.done);
      });

  m.def("make_env", [](const std::string& name) { return mpf::envs::make_env(name); },
        py::arg("name"));

  py::class_<mpf::sac::CandidatePolicy, std::shared_ptr<mpf::sac::CandidatePolicy>>(m,
                                                                                    "Candidate")
      .def_static("load",
                  [](const std::filesystem::path& path) {
                    return std::make_shared<mpf::sac::CandidatePolicy>(
                        mpf::sac::CandidatePolicy::load(path));
                  },
                  py::arg("path"))
      .def("save", &mpf::sac::CandidatePolicy::save, py::arg("path"))
      .def_property_readonly("alpha", &mpf::sac::CandidatePolicy::alpha_value)
      .def_property_readonly("seed",
                             [](const mpf::sac::CandidatePolicy& c) { return c.seed; })
      .def("encode",
           [](const mpf::sac::CandidatePolicy& c, const std::vector<double>& ctx) {
             return c.encoder.encode_mean(ctx);
           },
           py::arg("context"))
      .def("act_mean",
           [](const mpf::sac::CandidatePolicy& c, const std::vector<double>& obs,
              const std::vector<double>& z) { return c.policy.act_mean(obs, z); },
           py::arg("obs"), py::arg("z"))
      .def("act_stochastic",
           [](const mpf::sac::CandidatePolicy& c, const std::vector<double>& obs,
              const std::vector<double>& z, std::uint64_t seed) {
             mpf::Rng rng(seed);
             return c.policy.act_stochastic(obs, z, rng);
           },
           py::arg("obs"), py::arg("z"), py::arg("seed"))
      .def("eval_return",
           [](const mpf::sac::CandidatePolicy& c, const std::string& env_name,
              const std::vector<double>& ctx, std::size_t episodes, std::uint64_t seed) {
             auto env = mpf::envs::make_env(env_name);
             mpf::Rng rng(seed);
             return mpf::sac::eval_mean_return(*env, c, ctx, episodes, rng);
           },
           py::arg("env"), py::arg("context"), py::arg("episodes") = 5, py::arg("seed") = 0);

  m.def("train_foundation",
        [](const std::string& env_name, const py::kwargs& kwargs) {
          auto env = mpf::envs::make_env(env_name);
          mpf::sac::TrainConfig cfg = train_config_from_kwargs(kwargs);
          std::vector<mpf::sac::EpochLog> log;
          auto cand = std::make_shared<mpf::sac::CandidatePolicy>(
              mpf::sac::train_foundation(*env, cfg, &log));
          py::list curve;
          for (const auto& row : log) {
            py::dict d;
            d["epoch"] = row.epoch;
            d["env_steps"] = row.env_steps;
            d["q_loss"] = row.q_loss;
            d["pi_loss"] = row.pi_loss;
            d["alpha"] = row.alpha;
            d["mean_return"] = row.mean_return;
            d["mean_entropy"] = row.mean_entropy;
            curve.append(d);
          }
          return py::make_tuple(cand, curve);
        },
        py::arg("env"),
        "Phase 1: train a context-conditioned foundation policy; returns (candidate, curve).");

  m.def("skill_generate",
        [](std::shared_ptr<mpf::sac::CandidatePolicy> cand, const std::string& env_name,
           const std::vector<double>& ctx, std::size_t k_max, std::uint64_t seed, double lo,
           double hi) {
          auto env = mpf::envs::make_env(env_name);
          mpf::tpe::TpeConfig tpe_cfg;
          tpe_cfg.lo = lo;
          tpe_cfg.hi = hi;
          mpf::tpe::GenerationResult res =
              mpf::tpe::skill_generate(*env, *cand, ctx, k_max, tpe_cfg, {}, seed);
          py::list history;
          for (const auto& rec : res.history) {
            history.append(py::make_tuple(rec.k, rec.z, rec.j));
          }
          py::dict out;
          out["z_star"] = res.best.z;
          out["j_star"] = res.best.j;
          out["history"] = history;
          return out;
        },
        py::arg("candidate"), py::arg("env"), py::arg("context"), py::arg("k_max") = 100,
        py::arg("seed") = 0, py::arg("lo") = -3.0, py::arg("hi") = 3.0,
        "Phase 3: TPE search over the 1-D latent with deterministic rollouts.");

  m.def("evaluate_latent",
        [](std::shared_ptr<mpf::sac::CandidatePolicy> cand, const std::string& env_name,
           const std::vector<double>& ctx, double z) {
          auto env = mpf::envs::make_env(env_name);
          return mpf::tpe::evaluate_latent(*env, *cand, ctx, z, {});
        },
        py::arg("candidate"), py::arg("env"), py::arg("context"), py::arg("z"));

  m.def("tpe_optimize",
        [](const std::function<double(double)>& f, double lo, double hi, std::size_t trials,
           std::uint64_t seed) {
          mpf::tpe::TpeConfig cfg;
          cfg.lo = lo;
          cfg.hi = hi;
          mpf::tpe::TpeState state(cfg, seed);
          for (std::size_t k = 0; k < trials; ++k) {
            const double z = state.suggest();
            state.record(z, f(z));
          }
          py::dict out;
          out["z_best"] = state.best().z;
          out["j_best"] = state.best().j;
          return out;
        },
        py::arg("f"), py::arg("lo"), py::arg("hi"), py::arg("trials") = 100, py::arg("seed") = 0,
        "Maximize a scalar function over [lo, hi] with the built-in TPE.");

  m.def("index_from_terms",
        [](const std::vector<double>& log_ratios, const std::vector<double>& returns,
           double beta) { return mpf::selection::index_from_terms(log_ratios, returns, beta); },
        py::arg("log_ratios"), py::arg("returns"), py::arg("beta"));
  m.def("gaussian_kl_diag",
        [](const std::vector<double>& mean, double std_q, double std_p) {
          return mpf::nets::gaussian_kl_diag(mean, std_q, std_p);
        },
        py::arg("mean"), py::arg("std_q"), py::arg("std_p"));

  m.def("run_pipeline",
        [](const std::filesystem::path& config, const std::string& out_dir, std::uint64_t seed,
           std::size_t jobs) {
          auto cfg = mpf::pipeline::ExperimentConfig::from_json_file(config);
          if (!out_dir.empty()) cfg.out_dir = out_dir;
          if (seed != 0) cfg.seed = seed;
          if (jobs != 0) cfg.jobs = jobs;
          mpf::pipeline::run_pipeline(cfg);
          return (cfg.out_dir / "manifest").string();
        },
        py::arg("config"), py::arg("out_dir") = std::string{}, py::arg("seed") = 0,
        py::arg("jobs") = 0, "Run acquire/select/generate/regret/plot end to end.");

  m.def("run_phase",
        [](const std::filesystem::path& config, const std::string& phase,
           const std::string& out_dir, std::uint64_t seed) {
          auto cfg = mpf::pipeline::ExperimentConfig::from_json_file(config);
          if (!out_dir.empty()) cfg.out_dir = out_dir;
          if (seed != 0) cfg.seed = seed;
          mpf::pipeline::run_phase(cfg, phase);
        },
        py::arg("config"), py::arg("phase"), py::arg("out_dir") = std::string{},
        py::arg("seed") = 0);

  m.attr("__version__") = "0.1.0";
}
