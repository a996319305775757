#include "mpf/context.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include "json.hpp"

namespace mpf::envs {

namespace {

using nlohmann::json;

const char* kind_str(DimKind k) {
  return k == DimKind::kDiscreteTwoSetting ? "discrete-two-setting" : "uniform-range";
}

DimKind parse_kind(const std::string& s, const std::string& origin) {
  if (s == "discrete-two-setting") return DimKind::kDiscreteTwoSetting;
  if (s == "uniform-range") return DimKind::kUniformRange;
  throw ConfigError("context spec " + origin + ": unknown kind '" + s + "'");
}

double dim_low(const ContextDim& d) {
  if (d.kind == DimKind::kUniformRange) return d.low;
  return std::min(d.settings[0], d.settings[1]);
}

double dim_high(const ContextDim& d) {
  if (d.kind == DimKind::kUniformRange) return d.high;
  return std::max(d.settings[0], d.settings[1]);
}

}  // namespace

void ContextSpec::validate() const {
  if (dims.empty()) throw ConfigError("context spec " + name + ": no dims");
  for (const ContextDim& d : dims) {
    if (d.name.empty()) throw ConfigError("context spec " + name + ": unnamed dim");
    if (d.kind == DimKind::kDiscreteTwoSetting) {
      if (d.settings.size() != 2) {
        throw ConfigError("context spec " + name + ": dim " + d.name +
                          " must carry exactly two settings, has " +
                          std::to_string(d.settings.size()));
      }
      if (!(std::isfinite(d.settings[0]) && std::isfinite(d.settings[1])) ||
          d.settings[0] == d.settings[1]) {
        throw ConfigError("context spec " + name + ": dim " + d.name +
                          " settings must be finite and distinct");
      }
    } else {
      if (!(std::isfinite(d.low) && std::isfinite(d.high)) || !(d.low < d.high)) {
        throw ConfigError("context spec " + name + ": dim " + d.name +
                          " requires low < high, got [" + std::to_string(d.low) + ", " +
                          std::to_string(d.high) + "]");
      }
    }
  }
}

ContextSpec ContextSpec::from_json_text(const std::string& text, const std::string& origin) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError("context spec " + origin + ": " + e.what());
  }
  ContextSpec spec;
  spec.name = j.value("name", origin);
  if (!j.contains("dims") || !j["dims"].is_array()) {
    throw ConfigError("context spec " + origin + ": missing dims array");
  }
  for (const auto& jd : j["dims"]) {
    ContextDim d;
    d.name = jd.value("name", "");
    d.kind = parse_kind(jd.value("kind", ""), origin);
    if (d.kind == DimKind::kDiscreteTwoSetting) {
      d.settings = jd.value("settings", std::vector<double>{});
      d.low = d.settings.size() == 2 ? std::min(d.settings[0], d.settings[1]) : 0.0;
      d.high = d.settings.size() == 2 ? std::max(d.settings[0], d.settings[1]) : 0.0;
    } else {
      d.low = jd.value("low", 0.0);
      d.high = jd.value("high", 0.0);
    }
    spec.dims.push_back(std::move(d));
  }
  spec.validate();
  return spec;
}

ContextSpec ContextSpec::from_json_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("context spec: cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return from_json_text(ss.str(), path.string());
}

std::string ContextSpec::to_json_text() const {
  json j;
  j["name"] = name;
  j["dims"] = json::array();
  for (const ContextDim& d : dims) {
    json jd;
    jd["name"] = d.name;
    jd["kind"] = kind_str(d.kind);
    if (d.kind == DimKind::kDiscreteTwoSetting) {
      jd["settings"] = d.settings;
    } else {
      jd["low"] = d.low;
      jd["high"] = d.high;
    }
    j["dims"].push_back(jd);
  }
  return j.dump(2) + "\n";
}

namespace {

const char* builtin_json(const std::string& name) {
  if (name == "linerunner_dir") {
    return R"({
  "name": "linerunner_dir",
  "dims": [
    {"name": "direction", "kind": "discrete-two-setting", "settings": [-1.0, 1.0]}
  ]
})";
  }
  if (name == "linerunner_vel") {
    return R"({
  "name": "linerunner_vel",
  "dims": [
    {"name": "target_velocity", "kind": "uniform-range", "low": 0.0, "high": 3.0}
  ]
})";
  }
  if (name == "ballbounce32") {
    return R"({
  "name": "ballbounce32",
  "dims": [
    {"name": "restitution", "kind": "discrete-two-setting", "settings": [0.6, 0.9]},
    {"name": "goal_x", "kind": "discrete-two-setting", "settings": [1.2, 1.8]},
    {"name": "goal_y", "kind": "discrete-two-setting", "settings": [0.9, 1.3]},
    {"name": "throwin_x", "kind": "discrete-two-setting", "settings": [0.8, 1.3]},
    {"name": "throwin_y", "kind": "discrete-two-setting", "settings": [1.5, 1.9]}
  ]
})";
  }
  return nullptr;
}

}  // namespace

bool ContextSpec::is_builtin(const std::string& name) { return builtin_json(name) != nullptr; }

ContextSpec ContextSpec::builtin(const std::string& name) {
  const char* text = builtin_json(name);
  if (text == nullptr) throw ConfigError("context spec: no builtin named '" + name + "'");
  return from_json_text(text, name);
}

ContextVector sample_context(const ContextSpec& spec, Rng& rng) {
  ContextVector c;
  c.reserve(spec.dims.size());
  for (const ContextDim& d : spec.dims) {
    if (d.kind == DimKind::kDiscreteTwoSetting) {
      c.push_back(d.settings[rng.index(2)]);
    } else {
      c.push_back(rng.uniform(d.low, d.high));
    }
  }
  return c;
}

ContextVector sample_heldout_context(const ContextSpec& spec, Rng& rng) {
  ContextVector c;
  c.reserve(spec.dims.size());
  for (const ContextDim& d : spec.dims) {
    c.push_back(rng.uniform(dim_low(d), dim_high(d)));
  }
  return c;
}

std::vector<ContextVector> enumerate_discrete_contexts(const ContextSpec& spec) {
  for (const ContextDim& d : spec.dims) {
    if (d.kind != DimKind::kDiscreteTwoSetting) {
      throw ConfigError("context spec " + spec.name + ": dim " + d.name +
                        " is not discrete; cannot enumerate");
    }
  }
  const std::size_t n = spec.dims.size();
  std::vector<ContextVector> out;
  out.reserve(std::size_t{1} << n);
  for (std::size_t mask = 0; mask < (std::size_t{1} << n); ++mask) {
    ContextVector c(n);
    for (std::size_t i = 0; i < n; ++i) {
      c[i] = spec.dims[i].settings[(mask >> i) & 1];
    }
    out.push_back(std::move(c));
  }
  return out;
}

void check_context(const ContextSpec& spec, const ContextVector& c) {
  if (c.size() != spec.dims.size()) {
    throw ConfigError("context spec " + spec.name + ": expected " +
                      std::to_string(spec.dims.size()) + " entries, got " +
                      std::to_string(c.size()));
  }
  for (std::size_t i = 0; i < c.size(); ++i) {
    const ContextDim& d = spec.dims[i];
    if (!(c[i] >= dim_low(d) && c[i] <= dim_high(d))) {
      throw ConfigError("context spec " + spec.name + ": entry " + d.name + "=" +
                        std::to_string(c[i]) + " outside [" + std::to_string(dim_low(d)) + ", " +
                        std::to_string(dim_high(d)) + "]");
    }
  }
}

}  // namespace mpf::envs
