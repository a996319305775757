#include "mpf/pipeline.hpp"

#include <atomic>
#include <cmath>
#include <fstream>
#include <functional>
#include <sstream>
#include <thread>

#include "json.hpp"
#include "mpf/csv.hpp"
#include "mpf/svg.hpp"

namespace mpf::pipeline {

namespace fs = std::filesystem;
using nlohmann::json;

// ---------------------------------------------------------------------------
// Config

namespace {

void reject_unknown_keys(const json& j, std::initializer_list<const char*> known,
                         const std::string& where) {
  for (const auto& [key, value] : j.items()) {
    bool ok = false;
    for (const char* k : known) {
      if (key == k) {
        ok = true;
        break;
      }
    }
    if (!ok) throw ConfigError("config " + where + ": unknown key '" + key + "'");
  }
}

void parse_train(const json& j, sac::TrainConfig& t) {
  reject_unknown_keys(j,
                      {"gamma", "beta", "tau", "batch", "collect_steps", "update_iters",
                       "epochs", "q_lr", "policy_lr", "encoder_lr", "alpha_lr",
                       "target_entropy", "buffer_capacity", "hidden", "encoder_hidden",
                       "latent_dim", "encoder_delta", "prior_sigma", "alpha_autotune",
                       "alpha_init", "single_q_actor"},
                      "train");
  t.gamma = j.value("gamma", t.gamma);
  t.beta = j.value("beta", t.beta);
  t.tau = j.value("tau", t.tau);
  t.batch = j.value("batch", t.batch);
  t.collect_steps = j.value("collect_steps", t.collect_steps);
  t.update_iters = j.value("update_iters", t.update_iters);
  t.epochs = j.value("epochs", t.epochs);
  t.q_lr = j.value("q_lr", t.q_lr);
  t.policy_lr = j.value("policy_lr", t.policy_lr);
  t.encoder_lr = j.value("encoder_lr", t.encoder_lr);
  t.alpha_lr = j.value("alpha_lr", t.alpha_lr);
  t.target_entropy = j.value("target_entropy", t.target_entropy);
  t.buffer_capacity = j.value("buffer_capacity", t.buffer_capacity);
  t.hidden = j.value("hidden", t.hidden);
  t.encoder_hidden = j.value("encoder_hidden", t.encoder_hidden);
  t.latent_dim = j.value("latent_dim", t.latent_dim);
  t.encoder_delta = j.value("encoder_delta", t.encoder_delta);
  t.prior_sigma = j.value("prior_sigma", t.prior_sigma);
  t.alpha_autotune = j.value("alpha_autotune", t.alpha_autotune);
  t.alpha_init = j.value("alpha_init", t.alpha_init);
  t.single_q_actor = j.value("single_q_actor", t.single_q_actor);
}

json train_json(const sac::TrainConfig& t) {
  json j;
  j["gamma"] = t.gamma;
  j["beta"] = t.beta;
  j["tau"] = t.tau;
  j["batch"] = t.batch;
  j["collect_steps"] = t.collect_steps;
  j["update_iters"] = t.update_iters;
  j["epochs"] = t.epochs;
  j["q_lr"] = t.q_lr;
  j["policy_lr"] = t.policy_lr;
  j["encoder_lr"] = t.encoder_lr;
  j["alpha_lr"] = t.alpha_lr;
  if (!std::isnan(t.target_entropy)) j["target_entropy"] = t.target_entropy;
  j["buffer_capacity"] = t.buffer_capacity;
  j["hidden"] = t.hidden;
  j["encoder_hidden"] = t.encoder_hidden;
  j["latent_dim"] = t.latent_dim;
  j["encoder_delta"] = t.encoder_delta;
  j["prior_sigma"] = t.prior_sigma;
  j["alpha_autotune"] = t.alpha_autotune;
  j["alpha_init"] = t.alpha_init;
  j["single_q_actor"] = t.single_q_actor;
  return j;
}

}  // namespace

ExperimentConfig ExperimentConfig::from_json_text(const std::string& text,
                                                  const std::string& origin) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError("config " + origin + ": " + e.what());
  }
  reject_unknown_keys(j,
                      {"env", "context_spec", "train", "candidates", "context_set_size", "k_max",
                       "heldout_count", "heldout_seed", "selection", "tpe", "generation",
                       "regret", "checkpoint_every", "out_dir", "seed", "jobs"},
                      origin);
  ExperimentConfig cfg;
  cfg.env = j.value("env", cfg.env);
  cfg.context_spec = j.value("context_spec", cfg.context_spec);
  if (j.contains("train")) parse_train(j["train"], cfg.train);
  cfg.candidates = j.value("candidates", cfg.candidates);
  cfg.context_set_size = j.value("context_set_size", cfg.context_set_size);
  cfg.k_max = j.value("k_max", cfg.k_max);
  cfg.heldout_count = j.value("heldout_count", cfg.heldout_count);
  cfg.heldout_seed = j.value("heldout_seed", cfg.heldout_seed);
  if (j.contains("selection")) {
    const json& js = j["selection"];
    reject_unknown_keys(js, {"alpha", "beta", "gamma", "prior_sigma", "rollouts"}, "selection");
    cfg.sel.alpha = js.value("alpha", cfg.sel.alpha);
    cfg.sel.beta = js.value("beta", cfg.sel.beta);
    cfg.sel.gamma = js.value("gamma", cfg.sel.gamma);
    cfg.sel.prior_sigma = js.value("prior_sigma", cfg.sel.prior_sigma);
    cfg.sel.rollouts = js.value("rollouts", cfg.sel.rollouts);
  }
  if (j.contains("tpe")) {
    const json& jt = j["tpe"];
    reject_unknown_keys(jt, {"lo", "hi", "quantile", "startup", "candidates"}, "tpe");
    cfg.tpe_cfg.lo = jt.value("lo", cfg.tpe_cfg.lo);
    cfg.tpe_cfg.hi = jt.value("hi", cfg.tpe_cfg.hi);
    cfg.tpe_cfg.quantile = jt.value("quantile", cfg.tpe_cfg.quantile);
    cfg.tpe_cfg.startup = jt.value("startup", cfg.tpe_cfg.startup);
    cfg.tpe_cfg.candidates = jt.value("candidates", cfg.tpe_cfg.candidates);
  }
  if (j.contains("generation")) {
    const json& jg = j["generation"];
    reject_unknown_keys(jg, {"alpha", "beta", "gamma", "prior_sigma"}, "generation");
    cfg.gen.alpha = jg.value("alpha", cfg.gen.alpha);
    cfg.gen.beta = jg.value("beta", cfg.gen.beta);
    cfg.gen.gamma = jg.value("gamma", cfg.gen.gamma);
    cfg.gen.prior_sigma = jg.value("prior_sigma", cfg.gen.prior_sigma);
  }
  if (j.contains("regret")) {
    const json& jr = j["regret"];
    reject_unknown_keys(jr, {"pools", "pool_size", "k_max", "heldout"}, "regret");
    cfg.regret_pools = jr.value("pools", cfg.regret_pools);
    cfg.regret_pool_size = jr.value("pool_size", cfg.regret_pool_size);
    cfg.regret_kmax = jr.value("k_max", cfg.regret_kmax);
    cfg.regret_heldout = jr.value("heldout", cfg.regret_heldout);
  }
  cfg.checkpoint_every = j.value("checkpoint_every", cfg.checkpoint_every);
  cfg.out_dir = fs::path(j.value("out_dir", std::string{}));
  cfg.seed = j.value("seed", cfg.seed);
  cfg.jobs = j.value("jobs", cfg.jobs);
  cfg.validate();
  return cfg;
}

ExperimentConfig ExperimentConfig::from_json_file(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("config: cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return from_json_text(ss.str(), path.string());
}

void ExperimentConfig::validate() const {
  if (!envs::is_builtin_env(env)) throw ConfigError("config: unknown env '" + env + "'");
  if (train.latent_dim != 1) {
    throw ConfigError("config: the pipeline searches a 1-D latent; latent_dim must be 1");
  }
  if (candidates < 1) throw ConfigError("config: candidates (K) must be >= 1");
  if (context_set_size < 1) throw ConfigError("config: context_set_size (|C|) must be >= 1");
  if (heldout_count < 1) throw ConfigError("config: heldout_count must be >= 1");
  if (!context_spec.empty() && !envs::ContextSpec::is_builtin(context_spec) &&
      !fs::exists(context_spec)) {
    throw ConfigError("config: context spec file does not exist: " + context_spec);
  }
  train.validate();
  tpe_cfg.validate();
}

envs::ContextSpec ExperimentConfig::resolve_context_spec() const {
  if (context_spec.empty()) return envs::ContextSpec::builtin(env);
  if (envs::ContextSpec::is_builtin(context_spec)) return envs::ContextSpec::builtin(context_spec);
  return envs::ContextSpec::from_json_file(context_spec);
}

std::unique_ptr<envs::Env> ExperimentConfig::make_env() const {
  if (context_spec.empty()) return envs::make_env(env);
  return envs::make_env(env, resolve_context_spec());
}

std::string ExperimentConfig::canonical_json() const {
  json j;
  j["env"] = env;
  j["context_spec"] = context_spec;
  j["train"] = train_json(train);
  j["candidates"] = candidates;
  j["context_set_size"] = context_set_size;
  j["k_max"] = k_max;
  j["heldout_count"] = heldout_count;
  j["heldout_seed"] = heldout_seed;
  j["selection"] = {{"alpha", sel.alpha},
                    {"beta", sel.beta},
                    {"gamma", sel.gamma},
                    {"prior_sigma", sel.prior_sigma},
                    {"rollouts", sel.rollouts}};
  j["tpe"] = {{"lo", tpe_cfg.lo},
              {"hi", tpe_cfg.hi},
              {"quantile", tpe_cfg.quantile},
              {"startup", tpe_cfg.startup},
              {"candidates", tpe_cfg.candidates}};
  j["generation"] = {{"alpha", gen.alpha},
                     {"beta", gen.beta},
                     {"gamma", gen.gamma},
                     {"prior_sigma", gen.prior_sigma}};
  j["regret"] = {{"pools", regret_pools},
                 {"pool_size", regret_pool_size},
                 {"k_max", regret_kmax},
                 {"heldout", regret_heldout}};
  j["checkpoint_every"] = checkpoint_every;
  j["seed"] = seed;
  return j.dump();
}

std::uint64_t ExperimentConfig::config_hash() const { return fnv1a64(canonical_json()); }

// ---------------------------------------------------------------------------
// Manifest

namespace {

std::string hex64(std::uint64_t v) {
  char buf[19];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

fs::path manifest_path(const fs::path& out_dir) { return out_dir / "manifest"; }

json load_manifest(const fs::path& out_dir) {
  const fs::path p = manifest_path(out_dir);
  if (!fs::exists(p)) return json::object();
  std::ifstream in(p);
  std::ostringstream ss;
  ss << in.rdbuf();
  try {
    return json::parse(ss.str());
  } catch (const json::parse_error& e) {
    throw IoError("manifest: " + p.string() + ": " + e.what());
  }
}

void store_manifest(const fs::path& out_dir, const json& m) {
  fs::create_directories(out_dir);
  std::ofstream out(manifest_path(out_dir), std::ios::binary);
  if (!out) throw IoError("manifest: cannot write " + manifest_path(out_dir).string());
  out << m.dump(2) << "\n";
}

// Upserts the hash entries of `files` (paths relative to out_dir) and records
// the phase as done. Guards against mixing configs in one artifact directory.
void update_manifest(const ExperimentConfig& cfg, const std::string& phase,
                     const std::vector<fs::path>& files) {
  json m = load_manifest(cfg.out_dir);
  const std::string hash = hex64(cfg.config_hash());
  if (m.contains("config_hash") && m["config_hash"] != hash) {
    throw ConfigError("manifest: " + cfg.out_dir.string() +
                      " was produced by a different config (hash mismatch)");
  }
  m["config_hash"] = hash;
  m["seed"] = cfg.seed;
  m["env"] = cfg.env;
  if (!m.contains("files")) m["files"] = json::object();
  for (const fs::path& f : files) {
    m["files"][f.generic_string()] = hash_file(cfg.out_dir / f);
  }
  if (!m.contains("phases")) m["phases"] = json::object();
  m["phases"][phase] = "done";
  m.erase("error");
  store_manifest(cfg.out_dir, m);
}

void write_error_manifest(const ExperimentConfig& cfg, const std::string& phase,
                          const std::string& message) {
  json m = load_manifest(cfg.out_dir);
  m["config_hash"] = hex64(cfg.config_hash());
  m["error"] = {{"phase", phase}, {"message", message}};
  store_manifest(cfg.out_dir, m);
}

void require_file(const fs::path& p, const std::string& phase, const std::string& hint) {
  if (!fs::exists(p)) {
    throw IoError(phase + ": missing prerequisite artifact " + p.string() + " (" + hint + ")");
  }
}

}  // namespace

std::string hash_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("hash: cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  const std::string bytes = ss.str();
  return hex64(fnv1a64(bytes.data(), bytes.size()));
}

void verify_manifest(const fs::path& out_dir) {
  json m = load_manifest(out_dir);
  if (!m.contains("files")) throw IoError("manifest: no files recorded in " + out_dir.string());
  for (const auto& [rel, expected] : m["files"].items()) {
    const fs::path p = out_dir / rel;
    if (!fs::exists(p)) throw IoError("manifest: listed file missing: " + p.string());
    const std::string actual = hash_file(p);
    if (actual != expected.get<std::string>()) {
      throw IoError("manifest: hash mismatch for " + p.string());
    }
  }
}

// ---------------------------------------------------------------------------
// Shared derivations

std::vector<envs::ContextVector> selection_contexts(const ExperimentConfig& cfg) {
  const envs::ContextSpec spec = cfg.resolve_context_spec();
  Rng rng(mix_seed(cfg.seed, "context-set"));
  std::vector<envs::ContextVector> out;
  out.reserve(cfg.context_set_size);
  for (std::size_t i = 0; i < cfg.context_set_size; ++i) {
    out.push_back(envs::sample_context(spec, rng));
  }
  return out;
}

std::vector<envs::ContextVector> heldout_contexts(const ExperimentConfig& cfg) {
  const envs::ContextSpec spec = cfg.resolve_context_spec();
  const std::uint64_t base = cfg.heldout_seed != 0 ? cfg.heldout_seed : cfg.seed;
  Rng rng(mix_seed(base, "heldout"));
  std::vector<envs::ContextVector> out;
  out.reserve(cfg.heldout_count);
  for (std::size_t i = 0; i < cfg.heldout_count; ++i) {
    out.push_back(envs::sample_heldout_context(spec, rng));
  }
  return out;
}

std::filesystem::path candidate_path(const ExperimentConfig& cfg, std::size_t k) {
  char name[40];
  std::snprintf(name, sizeof(name), "candidates/candidate_%02zu.bin", k);
  return cfg.out_dir / name;
}

namespace {

fs::path curve_rel(std::size_t k) {
  char name[40];
  std::snprintf(name, sizeof(name), "candidates/curve_%02zu.csv", k);
  return name;
}

const std::vector<std::string> kCurveHeader{"epoch",  "env_steps",   "q_loss",      "pi_loss",
                                            "alpha",  "mean_return", "mean_entropy"};

void write_curve_csv(const fs::path& path, const std::vector<sac::EpochLog>& log) {
  io::CsvWriter csv(path);
  csv.write_header(kCurveHeader);
  for (const sac::EpochLog& row : log) {
    csv.write_row(std::vector<double>{static_cast<double>(row.epoch),
                                      static_cast<double>(row.env_steps), row.q_loss, row.pi_loss,
                                      row.alpha, row.mean_return, row.mean_entropy});
  }
}

// Runs f(k) for k in [0, n) across up to `jobs` worker threads; rethrows the
// first captured exception. Output slots keep results deterministic.
void parallel_for(std::size_t n, std::size_t jobs, const std::function<void(std::size_t)>& f) {
  if (jobs <= 1 || n <= 1) {
    for (std::size_t k = 0; k < n; ++k) f(k);
    return;
  }
  std::vector<std::exception_ptr> errors(n);
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    while (true) {
      const std::size_t k = next.fetch_add(1);
      if (k >= n) return;
      try {
        f(k);
      } catch (...) {
        errors[k] = std::current_exception();
      }
    }
  };
  std::vector<std::thread> threads;
  const std::size_t workers = std::min(jobs, n);
  threads.reserve(workers);
  for (std::size_t w = 0; w < workers; ++w) threads.emplace_back(worker);
  for (std::thread& th : threads) th.join();
  for (const std::exception_ptr& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

}  // namespace

// ---------------------------------------------------------------------------
// Phases

void run_acquire(const ExperimentConfig& cfg) {
  cfg.validate();
  fs::create_directories(cfg.out_dir / "candidates");
  std::vector<std::vector<sac::EpochLog>> logs(cfg.candidates);

  parallel_for(cfg.candidates, cfg.jobs, [&](std::size_t k) {
    std::unique_ptr<envs::Env> env = cfg.make_env();
    sac::TrainConfig tc = cfg.train;
    tc.seed = cfg.seed + k;  // per-candidate seed fan-out
    sac::EpochCallback cb = nullptr;
    if (cfg.checkpoint_every > 0) {
      cb = [&cfg, k](std::size_t epoch, const sac::CandidatePolicy& cand) {
        if (epoch % cfg.checkpoint_every == 0) {
          char name[64];
          std::snprintf(name, sizeof(name), "candidates/checkpoint_%02zu_epoch_%04zu.bin", k,
                        epoch);
          cand.save(cfg.out_dir / name);
        }
      };
    }
    log_info("acquire: training candidate " + std::to_string(k) + " (seed " +
             std::to_string(tc.seed) + ")");
    sac::CandidatePolicy cand = sac::train_foundation(*env, tc, &logs[k], nullptr, cb);
    cand.save(candidate_path(cfg, k));
    write_curve_csv(cfg.out_dir / curve_rel(k), logs[k]);
  });

  // Merged training curves with a leading candidate column.
  {
    io::CsvWriter csv(cfg.out_dir / "curves.csv");
    std::vector<std::string> header{"candidate"};
    header.insert(header.end(), kCurveHeader.begin(), kCurveHeader.end());
    csv.write_header(header);
    for (std::size_t k = 0; k < cfg.candidates; ++k) {
      for (const sac::EpochLog& row : logs[k]) {
        csv.write_row(std::vector<double>{static_cast<double>(k), static_cast<double>(row.epoch),
                                          static_cast<double>(row.env_steps), row.q_loss,
                                          row.pi_loss, row.alpha, row.mean_return,
                                          row.mean_entropy});
      }
    }
  }

  std::vector<fs::path> files{"curves.csv"};
  for (std::size_t k = 0; k < cfg.candidates; ++k) {
    files.push_back(fs::path("candidates") / candidate_path(cfg, k).filename());
    files.push_back(curve_rel(k));
  }
  update_manifest(cfg, "acquire", files);
}

void run_select(const ExperimentConfig& cfg) {
  cfg.validate();
  for (std::size_t k = 0; k < cfg.candidates; ++k) {
    require_file(candidate_path(cfg, k), "select", "run acquire first");
  }
  const std::vector<envs::ContextVector> contexts = selection_contexts(cfg);

  std::vector<double> indices(cfg.candidates);
  std::vector<double> mean_returns(cfg.candidates);
  std::vector<std::uint64_t> seeds(cfg.candidates);
  parallel_for(cfg.candidates, cfg.jobs, [&](std::size_t k) {
    sac::CandidatePolicy cand = sac::CandidatePolicy::load(candidate_path(cfg, k));
    cand.seed = cfg.seed + k;
    std::unique_ptr<envs::Env> env = cfg.make_env();
    Rng rng(mix_seed(cfg.seed, "select-candidate-" + std::to_string(k)));
    indices[k] = selection::selection_index(*env, cand, contexts, cfg.sel, rng);
    double mean_r = 0.0;
    for (double r : cand.context_returns) mean_r += r;
    mean_returns[k] = mean_r / static_cast<double>(cand.context_returns.size());
    seeds[k] = cand.seed;
  });

  const std::size_t selected = selection::select_policy(indices, seeds);
  {
    io::CsvWriter csv(cfg.out_dir / "selection.csv");
    const std::vector<std::string> header{"candidate", "seed", "l_k", "mean_R", "selected"};
    csv.write_header(header);
    for (std::size_t k = 0; k < cfg.candidates; ++k) {
      csv.write_row(std::vector<double>{static_cast<double>(k), static_cast<double>(seeds[k]),
                                        indices[k], mean_returns[k],
                                        k == selected ? 1.0 : 0.0});
    }
  }
  log_info("select: candidate " + std::to_string(selected) + " selected");
  update_manifest(cfg, "select", {"selection.csv"});
}

namespace {

std::size_t selected_candidate_from_csv(const ExperimentConfig& cfg) {
  const fs::path sel_path = cfg.out_dir / "selection.csv";
  require_file(sel_path, "generate", "run select first");
  io::CsvTable table = io::read_csv(sel_path);
  const std::size_t sel_col = table.col("selected");
  const std::size_t cand_col = table.col("candidate");
  for (std::size_t r = 0; r < table.rows.size(); ++r) {
    if (table.num(r, sel_col) == 1.0) {
      return static_cast<std::size_t>(table.num(r, cand_col));
    }
  }
  throw IoError("generate: no selected candidate recorded in " + sel_path.string());
}

}  // namespace

void run_generate(const ExperimentConfig& cfg) {
  cfg.validate();
  const std::size_t selected = selected_candidate_from_csv(cfg);
  require_file(candidate_path(cfg, selected), "generate", "run acquire first");
  const sac::CandidatePolicy cand = sac::CandidatePolicy::load(candidate_path(cfg, selected));
  const std::vector<envs::ContextVector> contexts = heldout_contexts(cfg);
  const envs::ContextSpec spec = cfg.resolve_context_spec();

  fs::create_directories(cfg.out_dir / "generation");
  {
    io::CsvWriter csv(cfg.out_dir / "generation/heldout_contexts.csv");
    std::vector<std::string> header{"context"};
    for (const envs::ContextDim& d : spec.dims) header.push_back(d.name);
    csv.write_header(header);
    for (std::size_t i = 0; i < contexts.size(); ++i) {
      std::vector<double> row{static_cast<double>(i)};
      row.insert(row.end(), contexts[i].begin(), contexts[i].end());
      csv.write_row(row);
    }
  }

  std::vector<tpe::GenerationResult> results(contexts.size());
  std::vector<double> j_zero(contexts.size());
  std::vector<double> j_encoder(contexts.size());
  parallel_for(contexts.size(), cfg.jobs, [&](std::size_t i) {
    std::unique_ptr<envs::Env> env = cfg.make_env();
    results[i] = tpe::skill_generate(*env, cand, contexts[i], cfg.k_max, cfg.tpe_cfg, cfg.gen,
                                     mix_seed(cfg.seed, "generate-" + std::to_string(i)));
    j_zero[i] = tpe::evaluate_latent(*env, cand, contexts[i], 0.0, cfg.gen);
    const std::vector<double> z_enc = cand.encoder.encode_mean(contexts[i]);
    j_encoder[i] = tpe::evaluate_latent(*env, cand, contexts[i], z_enc[0], cfg.gen);
  });

  std::vector<fs::path> files{"generation/heldout_contexts.csv", "generation/summary.csv"};
  for (std::size_t i = 0; i < contexts.size(); ++i) {
    char name[48];
    std::snprintf(name, sizeof(name), "generation/context_%02zu.csv", i);
    tpe::write_generation_csv(cfg.out_dir / name, results[i]);
    files.emplace_back(name);
  }
  {
    io::CsvWriter csv(cfg.out_dir / "generation/summary.csv");
    const std::vector<std::string> header{"context", "z_star", "J_star", "J_zero", "J_encoder"};
    csv.write_header(header);
    for (std::size_t i = 0; i < contexts.size(); ++i) {
      csv.write_row(std::vector<double>{static_cast<double>(i), results[i].best.z,
                                        results[i].best.j, j_zero[i], j_encoder[i]});
    }
  }
  update_manifest(cfg, "generate", files);
}

void run_regret(const ExperimentConfig& cfg) {
  cfg.validate();
  const fs::path sel_path = cfg.out_dir / "selection.csv";
  require_file(sel_path, "regret", "run select first");
  io::CsvTable table = io::read_csv(sel_path);
  std::vector<double> indices = table.column("l_k");
  std::vector<double> seeds_d = table.column("seed");
  std::vector<std::uint64_t> seeds(seeds_d.begin(), seeds_d.end());
  if (indices.size() != cfg.candidates) {
    throw IoError("regret: selection.csv lists " + std::to_string(indices.size()) +
                  " candidates, config expects " + std::to_string(cfg.candidates));
  }
  for (std::size_t k = 0; k < cfg.candidates; ++k) {
    require_file(candidate_path(cfg, k), "regret", "run acquire first");
  }

  // Post-generation held-out return per candidate (reduced budget).
  const envs::ContextSpec spec = cfg.resolve_context_spec();
  Rng ctx_rng(mix_seed(cfg.seed, "regret-heldout"));
  std::vector<envs::ContextVector> contexts;
  for (std::size_t i = 0; i < cfg.regret_heldout; ++i) {
    contexts.push_back(envs::sample_heldout_context(spec, ctx_rng));
  }

  std::vector<double> heldout_returns(cfg.candidates);
  parallel_for(cfg.candidates, cfg.jobs, [&](std::size_t k) {
    const sac::CandidatePolicy cand = sac::CandidatePolicy::load(candidate_path(cfg, k));
    std::unique_ptr<envs::Env> env = cfg.make_env();
    double total = 0.0;
    for (std::size_t i = 0; i < contexts.size(); ++i) {
      tpe::GenerationResult res = tpe::skill_generate(
          *env, cand, contexts[i], cfg.regret_kmax, cfg.tpe_cfg, cfg.gen,
          mix_seed(cfg.seed, "regret-gen-" + std::to_string(k) + "-" + std::to_string(i)));
      total += res.best.j;
    }
    heldout_returns[k] = total / static_cast<double>(contexts.size());
  });

  Rng boot_rng(mix_seed(cfg.seed, "regret-bootstrap"));
  selection::RegretReport report = selection::top_one_regret(
      indices, heldout_returns, seeds, cfg.regret_pools, cfg.regret_pool_size, boot_rng);
  report.bootstrap_seed = mix_seed(cfg.seed, "regret-bootstrap");

  {
    io::CsvWriter csv(cfg.out_dir / "regret.csv");
    const std::vector<std::string> header{"method", "N", "pool_size", "mean_regret"};
    csv.write_header(header);
    csv.write_raw_line("index," + std::to_string(report.pools) + "," +
                       std::to_string(report.pool_size) + "," +
                       io::fmt_double(report.mean_regret_index));
    csv.write_raw_line("random," + std::to_string(report.pools) + "," +
                       std::to_string(report.pool_size) + "," +
                       io::fmt_double(report.mean_regret_random));
  }
  update_manifest(cfg, "regret", {"regret.csv"});
}

void run_plot(const ExperimentConfig& cfg) {
  cfg.validate();
  const fs::path curves = cfg.out_dir / "curves.csv";
  require_file(curves, "plot", "run acquire first");
  fs::create_directories(cfg.out_dir / "plots");
  std::vector<fs::path> files;

  {
    io::CsvTable table = io::read_csv(curves);
    const std::size_t cand_col = table.col("candidate");
    const std::size_t x_col = table.col("env_steps");
    const std::size_t y_col = table.col("mean_return");
    std::vector<io::Series> series;
    for (std::size_t r = 0; r < table.rows.size(); ++r) {
      const std::size_t k = static_cast<std::size_t>(table.num(r, cand_col));
      while (series.size() <= k) {
        series.push_back({"candidate " + std::to_string(series.size()), {}, {}});
      }
      series[k].x.push_back(table.num(r, x_col));
      series[k].y.push_back(table.num(r, y_col));
    }
    io::write_line_chart(cfg.out_dir / "plots/curves.svg", "training curves", "env steps",
                         "mean return", series);
    files.emplace_back("plots/curves.svg");
  }

  const fs::path sel_path = cfg.out_dir / "selection.csv";
  if (fs::exists(sel_path)) {
    io::CsvTable table = io::read_csv(sel_path);
    io::Series s{"l_k", table.column("candidate"), table.column("l_k")};
    io::write_line_chart(cfg.out_dir / "plots/selection.svg", "selection index", "candidate",
                         "l_k", {s});
    files.emplace_back("plots/selection.svg");
  }

  const fs::path summary = cfg.out_dir / "generation/summary.csv";
  if (fs::exists(summary)) {
    io::CsvTable table = io::read_csv(summary);
    io::write_box_plot(cfg.out_dir / "plots/generation_box.svg",
                       "held-out returns before/after generation", "J",
                       {{"z = 0", table.column("J_zero")},
                        {"generated z*", table.column("J_star")},
                        {"encoder z=g(c)", table.column("J_encoder")}});
    files.emplace_back("plots/generation_box.svg");
  }

  const fs::path regret = cfg.out_dir / "regret.csv";
  if (fs::exists(regret)) {
    io::CsvTable table = io::read_csv(regret);
    std::vector<std::pair<std::string, std::vector<double>>> groups;
    const std::size_t mcol = table.col("method");
    const std::size_t rcol = table.col("mean_regret");
    for (std::size_t r = 0; r < table.rows.size(); ++r) {
      groups.emplace_back(table.rows[r][mcol], std::vector<double>{table.num(r, rcol)});
    }
    io::write_box_plot(cfg.out_dir / "plots/regret.svg", "top-one regret", "mean regret",
                       groups);
    files.emplace_back("plots/regret.svg");
  }

  update_manifest(cfg, "plot", files);
}

void run_pipeline(const ExperimentConfig& cfg) {
  const std::pair<const char*, void (*)(const ExperimentConfig&)> phases[] = {
      {"acquire", run_acquire}, {"select", run_select},   {"generate", run_generate},
      {"regret", run_regret},   {"plot", run_plot},
  };
  for (const auto& [name, fn] : phases) {
    try {
      log_info(std::string("pipeline: phase ") + name);
      fn(cfg);
    } catch (const std::exception& e) {
      write_error_manifest(cfg, name, e.what());
      throw;
    }
  }
  verify_manifest(cfg.out_dir);
}

void run_phase(const ExperimentConfig& cfg, const std::string& phase) {
  if (phase == "acquire") return run_acquire(cfg);
  if (phase == "select") return run_select(cfg);
  if (phase == "generate") return run_generate(cfg);
  if (phase == "regret") return run_regret(cfg);
  if (phase == "plot") return run_plot(cfg);
  if (phase == "pipeline") return run_pipeline(cfg);
  throw ConfigError("unknown phase '" + phase + "'");
}

}  // namespace mpf::pipeline
