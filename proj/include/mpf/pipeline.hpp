#pragma once

#include <filesystem>
#include <optional>

#include "mpf/sac.hpp"
#include "mpf/selection.hpp"
#include "mpf/tpe.hpp"

namespace mpf::pipeline {

// Experiment description, loadable from a JSON file. Every phase derives its
// RNG streams from (seed, phase tag), so staged subcommand runs and the
// monolithic pipeline produce identical artifacts.
struct ExperimentConfig {
  std::string env = "linerunner_dir";
  std::string context_spec;  // builtin name or JSON path; empty -> env default
  sac::TrainConfig train;
  std::size_t candidates = 5;        // K
  std::size_t context_set_size = 2;  // |C| for the selection index
  std::size_t k_max = 100;
  std::size_t heldout_count = 8;
  std::uint64_t heldout_seed = 0;    // 0 -> derived from the global seed
  selection::SelectionConfig sel;
  tpe::TpeConfig tpe_cfg;
  tpe::GenConfig gen;
  std::size_t regret_pools = 1000;
  std::size_t regret_pool_size = 5;
  std::size_t regret_kmax = 30;      // generation budget per regret evaluation
  std::size_t regret_heldout = 4;    // held-out contexts per candidate
  std::size_t checkpoint_every = 0;  // epochs; 0 disables mid-run checkpoints
  std::filesystem::path out_dir;
  std::uint64_t seed = 1;
  std::size_t jobs = 1;

  static ExperimentConfig from_json_file(const std::filesystem::path& path);
  static ExperimentConfig from_json_text(const std::string& text, const std::string& origin);
  // Semantic fields only (out_dir and jobs excluded): two runs that must
  // produce identical artifacts hash identically.
  std::string canonical_json() const;
  std::uint64_t config_hash() const;
  void validate() const;

  envs::ContextSpec resolve_context_spec() const;
  std::unique_ptr<envs::Env> make_env() const;
};

// Per-phase entry points. Each reads its prerequisites from out_dir, writes
// only its own artifact namespace and updates the manifest.
void run_acquire(const ExperimentConfig& cfg);
void run_select(const ExperimentConfig& cfg);
void run_generate(const ExperimentConfig& cfg);
void run_regret(const ExperimentConfig& cfg);
void run_plot(const ExperimentConfig& cfg);

// acquire -> select -> generate -> regret -> plot, then verifies every
// manifest hash. A phase failure leaves partial artifacts plus an error
// manifest naming the phase.
void run_pipeline(const ExperimentConfig& cfg);

// Dispatch by name ("acquire", "select", "generate", "regret", "plot",
// "pipeline").
void run_phase(const ExperimentConfig& cfg, const std::string& phase);

// Recomputes the hash of every file listed in the manifest; throws IoError on
// the first mismatch or missing file.
void verify_manifest(const std::filesystem::path& out_dir);

std::string hash_file(const std::filesystem::path& path);

// Held-out contexts used by generate (and criterion-style evaluations).
std::vector<envs::ContextVector> heldout_contexts(const ExperimentConfig& cfg);
// Selection context set C, fixed before any candidate is trained.
std::vector<envs::ContextVector> selection_contexts(const ExperimentConfig& cfg);

std::filesystem::path candidate_path(const ExperimentConfig& cfg, std::size_t k);

}  // namespace mpf::pipeline
