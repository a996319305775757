#include "mpf/env.hpp"

#include <fstream>

#include "mpf/ball_bounce.hpp"
#include "mpf/csv.hpp"
#include "mpf/line_runner.hpp"

namespace mpf::envs {

std::unique_ptr<Env> make_env(const std::string& name, std::optional<ContextSpec> spec) {
  if (name == "linerunner_dir") {
    return std::make_unique<LineRunnerEnv>(LineRunnerEnv::Mode::kDir, std::move(spec));
  }
  if (name == "linerunner_vel") {
    return std::make_unique<LineRunnerEnv>(LineRunnerEnv::Mode::kVel, std::move(spec));
  }
  if (name == "ballbounce32") return std::make_unique<BallBounceEnv>(std::move(spec));
  throw ConfigError("env: no builtin environment named '" + name + "'");
}

bool is_builtin_env(const std::string& name) {
  return name == "linerunner_dir" || name == "linerunner_vel" || name == "ballbounce32";
}

void dump_trajectory_csv(const std::filesystem::path& path, Env& env, const ContextVector& c,
                         std::uint64_t seed, std::span<const std::vector<double>> actions) {
  io::CsvWriter csv(path);
  std::vector<std::string> header{"t"};
  for (std::size_t i = 0; i < env.obs_dim(); ++i) header.push_back("s" + std::to_string(i));
  for (std::size_t i = 0; i < env.action_dim(); ++i) header.push_back("a" + std::to_string(i));
  header.push_back("r");
  header.push_back("done");
  csv.write_header(header);

  std::vector<double> obs = env.reset(c, seed);
  for (std::size_t t = 0; t < actions.size(); ++t) {
    StepResult res = env.step(actions[t]);
    std::vector<double> row;
    row.push_back(static_cast<double>(t));
    row.insert(row.end(), obs.begin(), obs.end());
    row.insert(row.end(), actions[t].begin(), actions[t].end());
    row.push_back(res.reward);
    row.push_back(res.done ? 1.0 : 0.0);
    csv.write_row(row);
    obs = std::move(res.obs);
    if (res.done) break;
  }
}

}  // namespace mpf::envs
