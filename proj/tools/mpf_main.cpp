#include <cstdio>
#include <string>

#include "CLI11.hpp"
#include "mpf/pipeline.hpp"
#include "mpf/svg.hpp"

namespace {

struct CommonOpts {
  std::string config;
  std::string out;
  std::uint64_t seed = 0;
  bool seed_set = false;
  std::size_t jobs = 0;
};

void add_common(CLI::App* cmd, CommonOpts& opts, bool config_required = true) {
  auto* c = cmd->add_option("--config", opts.config, "experiment config (JSON)");
  if (config_required) c->required();
  cmd->add_option("--out", opts.out, "output directory (overrides config)");
  cmd->add_option("--seed", opts.seed, "global seed (overrides config)")
      ->each([&opts](const std::string&) { opts.seed_set = true; });
  cmd->add_option("--jobs", opts.jobs, "worker threads for candidate fan-out");
}

mpf::pipeline::ExperimentConfig resolve(const CommonOpts& opts) {
  auto cfg = mpf::pipeline::ExperimentConfig::from_json_file(opts.config);
  if (!opts.out.empty()) cfg.out_dir = opts.out;
  if (opts.seed_set) cfg.seed = opts.seed;
  if (opts.jobs > 0) cfg.jobs = opts.jobs;
  if (cfg.out_dir.empty()) {
    throw mpf::ConfigError("no output directory: set out_dir in the config or pass --out");
  }
  return cfg;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"mpf - multitask policy foundry: acquisition, selection, skill generation"};
  app.require_subcommand(1);

  CommonOpts acquire_opts, select_opts, generate_opts, regret_opts, pipeline_opts, plot_opts;
  std::string pipeline_phase;
  std::vector<std::string> plot_csvs;

  add_common(app.add_subcommand("acquire", "train the K candidate policies"), acquire_opts);
  add_common(app.add_subcommand("select", "score candidates and pick the foundation policy"),
             select_opts);
  add_common(app.add_subcommand("generate", "optimize the latent on held-out contexts"),
             generate_opts);
  add_common(app.add_subcommand("regret", "bootstrap top-one regret of the selection index"),
             regret_opts);
  auto* plot_cmd = app.add_subcommand("plot", "render SVG plots from CSV artifacts");
  add_common(plot_cmd, plot_opts, /*config_required=*/false);
  plot_cmd->add_option("csv", plot_csvs, "standalone CSV files to render as line charts");
  auto* pipe_cmd = app.add_subcommand("pipeline", "run every phase end to end");
  add_common(pipe_cmd, pipeline_opts);
  pipe_cmd->add_option("--phase", pipeline_phase,
                       "run a single phase (acquire|select|generate|regret|plot)");

  CLI11_PARSE(app, argc, argv);

  try {
    if (app.got_subcommand("acquire")) {
      mpf::pipeline::run_acquire(resolve(acquire_opts));
    } else if (app.got_subcommand("select")) {
      mpf::pipeline::run_select(resolve(select_opts));
    } else if (app.got_subcommand("generate")) {
      mpf::pipeline::run_generate(resolve(generate_opts));
    } else if (app.got_subcommand("regret")) {
      mpf::pipeline::run_regret(resolve(regret_opts));
    } else if (app.got_subcommand("plot")) {
      if (!plot_csvs.empty()) {
        const std::filesystem::path out =
            plot_opts.out.empty() ? std::filesystem::path(".") : std::filesystem::path(plot_opts.out);
        for (const std::string& csv : plot_csvs) {
          std::filesystem::path src(csv);
          mpf::io::plot_csv_file(src, out / (src.stem().string() + ".svg"));
        }
      } else {
        if (plot_opts.config.empty()) {
          throw mpf::ConfigError("plot: pass --config or standalone CSV files");
        }
        mpf::pipeline::run_plot(resolve(plot_opts));
      }
    } else if (app.got_subcommand("pipeline")) {
      auto cfg = resolve(pipeline_opts);
      if (pipeline_phase.empty()) {
        mpf::pipeline::run_pipeline(cfg);
      } else {
        mpf::pipeline::run_phase(cfg, pipeline_phase);
      }
    }
  } catch (const std::exception& e) {
    mpf::log_error(e.what());
    return 1;
  }
  return 0;
}
