#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "mpf/common.hpp"

namespace mpf::envs {

enum class DimKind { kDiscreteTwoSetting, kUniformRange };

struct ContextDim {
  std::string name;
  DimKind kind = DimKind::kUniformRange;
  double low = 0.0;
  double high = 0.0;
  std::vector<double> settings;  // exactly two for discrete dims
};

using ContextVector = std::vector<double>;

// Declarative description of the context space: which dimensions exist, their
// kinds and ranges. Validated on construction and on JSON load.
struct ContextSpec {
  std::string name;
  std::vector<ContextDim> dims;

  std::size_t size() const { return dims.size(); }
  void validate() const;

  // JSON file with fields name/kind/low/high/settings per dim.
  static ContextSpec from_json_file(const std::filesystem::path& path);
  static ContextSpec from_json_text(const std::string& text, const std::string& origin);
  std::string to_json_text() const;

  // Bundled specs: linerunner_dir, linerunner_vel, ballbounce32.
  static ContextSpec builtin(const std::string& name);
  static bool is_builtin(const std::string& name);
};

// Training-time draw: discrete dims pick one of their two settings uniformly,
// uniform dims draw U(low, high). The context stays fixed for a full episode.
ContextVector sample_context(const ContextSpec& spec, Rng& rng);

// Held-out draw for the generation phase: every dim draws uniformly inside the
// interval it spans, so discrete dims produce values strictly between their
// two training settings (novel with probability one).
ContextVector sample_heldout_context(const ContextSpec& spec, Rng& rng);

// All 2^d combinations of discrete settings; throws if any dim is uniform.
std::vector<ContextVector> enumerate_discrete_contexts(const ContextSpec& spec);

// Entry-wise range check against the spec.
void check_context(const ContextSpec& spec, const ContextVector& c);

}  // namespace mpf::envs
