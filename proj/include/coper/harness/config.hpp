// Copyright 2026 The coper Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

// Experiment configuration and its JSON form. A config file looks like
//
//   {
//     "schema": "coper-config v1",
//     "name": "gaussian-half",
//     "signal":   {"kind": "image", "path": "chelsea_256.pgm", "downsample": true, "side": 128},
//     "ensemble": {"kind": "gaussian", "ratio": 0.5},
//     "solver":   {"kind": "gd-coper", "schedule": "gaussian-practical"},
//     "code":     {"kind": "dct-threshold", "quality": 0},
//     "init":     {"kind": "white", "value": 255},
//     "seeds": [1, 2, 3]
//   }
//
// Omitted optional keys take their defaults; `to_json` always writes every
// key, so parse(to_json(c)) == c.

#include "coper/core.hpp"
#include "coper/solvers.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <fstream>
#include <initializer_list>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

namespace coper::harness {

inline constexpr const char* kConfigSchema = "coper-config v1";

/// Raised by ExperimentConfig::validate; `problems` lists every violation.
class ConfigError : public ArgumentError {
 public:
  explicit ConfigError(std::vector<std::string> problems)
      : ArgumentError(join(problems)), problems_(std::move(problems)) {}
  const std::vector<std::string>& problems() const noexcept { return problems_; }

 private:
  static std::string join(const std::vector<std::string>& p) {
    std::string s = "invalid config:";
    for (const auto& e : p) s += "\n  " + e;
    return s;
  }
  std::vector<std::string> problems_;
};

struct SignalSpec {
  std::string kind = "image";  // image | sparse
  std::string path;            // image
  bool downsample = false;
  std::int64_t side = 128;
  std::int64_t n = 0;          // sparse: unit-norm complex k-sparse in C^n
  std::int64_t k = 0;
  bool operator==(const SignalSpec&) const = default;
};

struct EnsembleSpec {
  std::string kind = "gaussian";  // gaussian | cdp
  double ratio = 1.0;             // gaussian: m / n, n counting real pixels
  std::int64_t masks = 1;         // cdp: L
  bool operator==(const EnsembleSpec&) const = default;
};

struct SolverSpec {
  std::string kind = "gd-coper";  // gd-coper | wf | coper
  std::string schedule = "gaussian-practical";
  bool operator==(const SolverSpec&) const = default;
};

struct CodeSpec {
  std::string kind = "dct-threshold";  // dct-threshold | ksparse
  double quality = 0.0;
  std::int64_t k = 1;
  std::int64_t bits = 8;
  bool normalize = true;
  bool operator==(const CodeSpec&) const = default;
};

struct InitSpec {
  std::string kind = "white";  // white | spectral | blended | file
  double value = 255.0;        // white level, also the white half of a blend
  double lambda = 0.5;         // blended: lambda * white + (1 - lambda) * truth
  std::string path;            // file: graymap of the signal's shape
  bool operator==(const InitSpec&) const = default;
};

struct ExperimentConfig {
  std::string name = "experiment";
  SignalSpec signal;
  EnsembleSpec ensemble;
  SolverSpec solver;
  CodeSpec code;
  InitSpec init;
  std::vector<std::uint64_t> seeds;
  std::optional<std::int64_t> iterations;  // solver default when absent
  double divergence_factor = 1e6;
  bool trajectory = false;
  std::int64_t workers = 1;
  std::string output_dir;  // empty: $COPER_OUT_DIR, else ./coper-out

  bool operator==(const ExperimentConfig&) const = default;

  std::size_t iteration_count() const {
    if (iterations) return static_cast<std::size_t>(*iterations);
    return solver.kind == "wf" ? SolverConfig::wf_defaults().max_iterations
                               : SolverConfig::gd_coper_defaults().max_iterations;
  }

  void validate() const;
};

inline std::string default_output_dir() {
  const char* env = std::getenv("COPER_OUT_DIR");
  return env && *env ? std::string(env) : std::string("coper-out");
}

inline std::string resolved_output_dir(const ExperimentConfig& c) {
  return c.output_dir.empty() ? default_output_dir() : c.output_dir;
}

inline void ExperimentConfig::validate() const {
  std::vector<std::string> p;
  auto need = [&p](bool ok, const std::string& msg) {
    if (!ok) p.push_back(msg);
  };

  if (signal.kind == "image") {
    need(!signal.path.empty(), "signal.path: required for image signals");
    need(signal.side >= 1, "signal.side: must be positive");
  } else if (signal.kind == "sparse") {
    need(signal.n >= 1, "signal.n: must be positive");
    need(signal.k >= 1 && signal.k <= signal.n, "signal.k: must lie in [1, n]");
  } else {
    p.push_back("signal.kind: expected image or sparse, got '" + signal.kind + "'");
  }

  if (ensemble.kind == "gaussian") {
    need(std::isfinite(ensemble.ratio) && ensemble.ratio > 0.0, "ensemble.ratio: must be positive");
  } else if (ensemble.kind == "cdp") {
    need(ensemble.masks >= 1, "ensemble.masks: must be positive");
  } else {
    p.push_back("ensemble.kind: expected gaussian or cdp, got '" + ensemble.kind + "'");
  }

  if (solver.kind == "gd-coper") {
    try {
      (void)parse_schedule_mode(solver.schedule);
    } catch (const ArgumentError&) {
      p.push_back("solver.schedule: unknown mode '" + solver.schedule + "'");
    }
  } else if (solver.kind != "wf" && solver.kind != "coper") {
    p.push_back("solver.kind: expected gd-coper, wf or coper, got '" + solver.kind + "'");
  }

  if (code.kind == "dct-threshold") {
    need(std::isfinite(code.quality) && code.quality >= 0.0, "code.quality: must be >= 0");
    need(signal.kind != "sparse", "code.kind: dct-threshold needs an image signal");
  } else if (code.kind == "ksparse") {
    need(code.k >= 1, "code.k: must be positive");
    need(code.bits >= 1 && code.bits <= 30, "code.bits: must lie in [1, 30]");
    if (signal.kind == "sparse") need(code.k <= signal.n, "code.k: exceeds signal.n");
  } else {
    p.push_back("code.kind: expected dct-threshold or ksparse, got '" + code.kind + "'");
  }
  if (solver.kind == "coper") need(code.kind == "ksparse", "solver.kind: coper enumerates a ksparse codebook");

  if (init.kind == "white") {
    need(std::isfinite(init.value) && init.value != 0.0, "init.value: must be finite and nonzero");
  } else if (init.kind == "blended") {
    need(init.lambda >= 0.0 && init.lambda <= 1.0, "init.lambda: must lie in [0, 1]");
    need(std::isfinite(init.value), "init.value: must be finite");
  } else if (init.kind == "file") {
    need(!init.path.empty(), "init.path: required for file initialization");
  } else if (init.kind != "spectral") {
    p.push_back("init.kind: expected white, spectral, blended or file, got '" + init.kind + "'");
  }

  need(!seeds.empty(), "seeds: at least one seed is required");
  if (iterations) need(*iterations >= 1, "iterations: must be >= 1");
  need(std::isfinite(divergence_factor) && divergence_factor > 0.0, "divergence_factor: must be positive");
  need(workers >= 1, "workers: must be >= 1");

  if (!p.empty()) throw ConfigError(std::move(p));
}

// JSON ----------------------------------------------------------------------

inline void to_json(nlohmann::json& j, const SignalSpec& s) {
  j = {{"kind", s.kind}, {"path", s.path}, {"downsample", s.downsample}, {"side", s.side}, {"n", s.n}, {"k", s.k}};
}
inline void to_json(nlohmann::json& j, const EnsembleSpec& s) {
  j = {{"kind", s.kind}, {"ratio", s.ratio}, {"masks", s.masks}};
}
inline void to_json(nlohmann::json& j, const SolverSpec& s) { j = {{"kind", s.kind}, {"schedule", s.schedule}}; }
inline void to_json(nlohmann::json& j, const CodeSpec& s) {
  j = {{"kind", s.kind}, {"quality", s.quality}, {"k", s.k}, {"bits", s.bits}, {"normalize", s.normalize}};
}
inline void to_json(nlohmann::json& j, const InitSpec& s) {
  j = {{"kind", s.kind}, {"value", s.value}, {"lambda", s.lambda}, {"path", s.path}};
}

inline void to_json(nlohmann::json& j, const ExperimentConfig& c) {
  j = nlohmann::json{{"schema", kConfigSchema},
                     {"name", c.name},
                     {"signal", c.signal},
                     {"ensemble", c.ensemble},
                     {"solver", c.solver},
                     {"code", c.code},
                     {"init", c.init},
                     {"seeds", c.seeds},
                     {"iterations", c.iterations ? nlohmann::json(*c.iterations) : nlohmann::json(nullptr)},
                     {"divergence_factor", c.divergence_factor},
                     {"trajectory", c.trajectory},
                     {"workers", c.workers},
                     {"output_dir", c.output_dir}};
}

namespace detail {

// Reads j[key] into out when present; type mismatches are collected.
template <class T>
void read_field(const nlohmann::json& j, const char* key, T& out, const std::string& where,
                std::vector<std::string>& problems) {
  if (!j.contains(key)) return;
  try {
    out = j.at(key).get<T>();
  } catch (const nlohmann::json::exception&) {
    problems.push_back(where + key + ": wrong type");
  }
}

inline const nlohmann::json* section(const nlohmann::json& j, const char* key, std::vector<std::string>& problems) {
  if (!j.contains(key)) return nullptr;
  if (!j.at(key).is_object()) {
    problems.push_back(std::string(key) + ": expected an object");
    return nullptr;
  }
  return &j.at(key);
}

inline void reject_unknown(const nlohmann::json& j, std::initializer_list<const char*> known, const std::string& where,
                           std::vector<std::string>& problems) {
  for (const auto& [key, _] : j.items()) {
    if (std::none_of(known.begin(), known.end(), [&key](const char* k) { return key == k; })) {
      problems.push_back(where + key + ": unknown key");
    }
  }
}

}  // namespace detail

/// Parses and validates. Unknown keys and type errors are reported together
/// with validation failures in one ConfigError.
inline ExperimentConfig config_from_json(const nlohmann::json& j) {
  std::vector<std::string> p;
  if (!j.is_object()) throw ConfigError({"config: expected a JSON object"});
  if (!j.contains("schema") || j.at("schema") != kConfigSchema) {
    p.push_back(std::string("schema: expected \"") + kConfigSchema + "\"");
  }
  ExperimentConfig c;
  using detail::read_field;
  read_field(j, "name", c.name, "", p);
  if (const auto* s = detail::section(j, "signal", p)) {
    read_field(*s, "kind", c.signal.kind, "signal.", p);
    read_field(*s, "path", c.signal.path, "signal.", p);
    read_field(*s, "downsample", c.signal.downsample, "signal.", p);
    read_field(*s, "side", c.signal.side, "signal.", p);
    read_field(*s, "n", c.signal.n, "signal.", p);
    read_field(*s, "k", c.signal.k, "signal.", p);
    detail::reject_unknown(*s, {"kind", "path", "downsample", "side", "n", "k"}, "signal.", p);
  } else {
    p.push_back("signal: required");
  }
  if (const auto* s = detail::section(j, "ensemble", p)) {
    read_field(*s, "kind", c.ensemble.kind, "ensemble.", p);
    read_field(*s, "ratio", c.ensemble.ratio, "ensemble.", p);
    read_field(*s, "masks", c.ensemble.masks, "ensemble.", p);
    detail::reject_unknown(*s, {"kind", "ratio", "masks"}, "ensemble.", p);
  }
  if (const auto* s = detail::section(j, "solver", p)) {
    read_field(*s, "kind", c.solver.kind, "solver.", p);
    read_field(*s, "schedule", c.solver.schedule, "solver.", p);
    detail::reject_unknown(*s, {"kind", "schedule"}, "solver.", p);
  }
  if (const auto* s = detail::section(j, "code", p)) {
    read_field(*s, "kind", c.code.kind, "code.", p);
    read_field(*s, "quality", c.code.quality, "code.", p);
    read_field(*s, "k", c.code.k, "code.", p);
    read_field(*s, "bits", c.code.bits, "code.", p);
    read_field(*s, "normalize", c.code.normalize, "code.", p);
    detail::reject_unknown(*s, {"kind", "quality", "k", "bits", "normalize"}, "code.", p);
  }
  if (const auto* s = detail::section(j, "init", p)) {
    read_field(*s, "kind", c.init.kind, "init.", p);
    read_field(*s, "value", c.init.value, "init.", p);
    read_field(*s, "lambda", c.init.lambda, "init.", p);
    read_field(*s, "path", c.init.path, "init.", p);
    detail::reject_unknown(*s, {"kind", "value", "lambda", "path"}, "init.", p);
  }
  read_field(j, "seeds", c.seeds, "", p);
  if (j.contains("iterations") && !j.at("iterations").is_null()) {
    std::int64_t it = 0;
    read_field(j, "iterations", it, "", p);
    c.iterations = it;
  }
  read_field(j, "divergence_factor", c.divergence_factor, "", p);
  read_field(j, "trajectory", c.trajectory, "", p);
  read_field(j, "workers", c.workers, "", p);
  read_field(j, "output_dir", c.output_dir, "", p);

  detail::reject_unknown(j,
                         {"schema", "name", "signal", "ensemble", "solver", "code", "init", "seeds", "iterations",
                          "divergence_factor", "trajectory", "workers", "output_dir"},
                         "", p);

  try {
    c.validate();
  } catch (const ConfigError& e) {
    p.insert(p.end(), e.problems().begin(), e.problems().end());
  }
  if (!p.empty()) throw ConfigError(std::move(p));
  return c;
}

inline std::string to_json_string(const ExperimentConfig& c, int indent = -1) {
  return nlohmann::json(c).dump(indent);
}

inline ExperimentConfig parse_config(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError(std::string("config: ") + e.what());
  }
  return config_from_json(j);
}

inline ExperimentConfig load_config(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw ParseError("cannot open config '" + path + "'");
  std::stringstream ss;
  ss << f.rdbuf();
  return parse_config(ss.str());
}

}  // namespace coper::harness
