// Copyright 2026 The coper Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

// Experiment orchestration: config -> per-seed runs -> CSV reports.
//
// Output files (all under the resolved output directory):
//   results.csv     one row per seed; first two lines are the schema tag and
//                   the embedded config, so the config can be recovered
//   trajectory.csv  per-iteration traces (only with `trajectory` set)
//   timings.csv     wall-clock seconds per seed, kept apart so the files
//                   above are byte-identical across reruns
//   summary.txt     plain-text digest
//
// Randomness per seed s: ensemble from derive_seed(s, {1}), synthetic signal
// from derive_seed(s, {2}), spectral start from derive_seed(s, {3}).

#include "coper/compression.hpp"
#include "coper/harness/config.hpp"
#include "coper/harness/image.hpp"
#include "coper/measurement.hpp"
#include "coper/solvers.hpp"

#include <atomic>
#include <cstdio>
#include <cstdlib>
#include <exception>
#include <filesystem>
#include <functional>
#include <fstream>
#include <memory>
#include <mutex>
#include <sstream>
#include <thread>

#ifndef COPER_DATA_DIR
#define COPER_DATA_DIR "data"
#endif

namespace coper::harness {

inline constexpr const char* kResultsSchema = "# coper-results v1";
inline constexpr const char* kTrajectorySchema = "# coper-trajectory v1";
inline constexpr const char* kTimingsSchema = "# coper-timings v1";
inline constexpr const char* kComparisonSchema = "# coper-comparison v1";

/// Shortest text that parses back to the same double; "nan" for NaN.
inline std::string fmt(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[32];
  for (int prec = 6; prec <= 17; ++prec) {
    std::snprintf(buf, sizeof buf, "%.*g", prec, v);
    if (std::strtod(buf, nullptr) == v) break;
  }
  return buf;
}

/// Fixed-point text for human-readable summaries.
inline std::string fmt_fixed(double v, int digits = 2) {
  if (!std::isfinite(v)) return fmt(v);
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

/// Looks for `path` as given, then under the bundled data directory.
inline std::string resolve_data_path(const std::string& path) {
  namespace fs = std::filesystem;
  if (fs::exists(path)) return path;
  const fs::path alt = fs::path(COPER_DATA_DIR) / path;
  if (fs::path(path).is_relative() && fs::exists(alt)) return alt.string();
  return path;
}

/// The true signal of one run. Images are real and carry their shape.
struct TruthSignal {
  CVec x;
  bool image = false;
  std::size_t rows = 0;
  std::size_t cols = 0;
};

inline TruthSignal make_signal(const ExperimentConfig& cfg, std::uint64_t seed) {
  TruthSignal t;
  if (cfg.signal.kind == "image") {
    const Image img = load_image(resolve_data_path(cfg.signal.path), cfg.signal.downsample,
                                 static_cast<std::size_t>(cfg.signal.side));
    t.x = img.pixels.cast<Complex>();
    t.image = true;
    t.rows = img.rows;
    t.cols = img.cols;
  } else {
    t.x = random_sparse_unit(cfg.signal.n, cfg.signal.k, derive_seed(seed, {2}));
    t.rows = static_cast<std::size_t>(cfg.signal.n);
    t.cols = 1;
  }
  return t;
}

inline Eigen::Index measurement_count(const ExperimentConfig& cfg, Eigen::Index n) {
  if (cfg.ensemble.kind == "cdp") return n * cfg.ensemble.masks;
  return std::max<Eigen::Index>(1, std::llround(cfg.ensemble.ratio * static_cast<double>(n)));
}

inline std::unique_ptr<MeasurementEnsemble> make_ensemble(const ExperimentConfig& cfg, Eigen::Index n,
                                                          std::uint64_t seed,
                                                          std::size_t cache_bytes = coper::detail::default_cache_bytes()) {
  const std::uint64_t s = derive_seed(seed, {1});
  if (cfg.ensemble.kind == "cdp") return std::make_unique<CodedDiffractionEnsemble>(n, cfg.ensemble.masks, s);
  return std::make_unique<GaussianEnsemble>(measurement_count(cfg, n), n, s, cache_bytes);
}

inline std::unique_ptr<CompressionCode> make_code(const ExperimentConfig& cfg, const TruthSignal& t) {
  if (cfg.code.kind == "ksparse") {
    return std::make_unique<KSparseQuantizingCode>(t.x.size(), cfg.code.k, static_cast<unsigned>(cfg.code.bits),
                                                   cfg.code.normalize);
  }
  return std::make_unique<DctThresholdCode>(t.rows, t.cols, cfg.code.quality);
}

inline CVec make_init(const ExperimentConfig& cfg, const MeasurementEnsemble& e, const RVec& y, const TruthSignal& t,
                      std::uint64_t seed) {
  const Eigen::Index n = t.x.size();
  const CVec white = CVec::Constant(n, Complex(cfg.init.value, 0.0));
  if (cfg.init.kind == "spectral") return spectral_init(e, y, derive_seed(seed, {3}));
  if (cfg.init.kind == "blended") return blended_init(white, t.x, cfg.init.lambda);
  if (cfg.init.kind == "file") {
    const Image img = load_image(resolve_data_path(cfg.init.path));
    if (img.rows != t.rows || img.cols != t.cols) {
      throw DimensionError("init file shape " + std::to_string(img.rows) + "x" + std::to_string(img.cols) +
                           " does not match the signal");
    }
    return img.pixels.cast<Complex>();
  }
  return white;
}

/// Outcome of one seed.
struct SeedRun {
  std::uint64_t seed = 0;
  Eigen::Index m = 0;
  Eigen::Index n = 0;
  RecoveryResult result;
  double error = 0.0;             // phase-aligned distance to truth
  double normalized_error = 0.0;  // error^2 / ||x||^2
  double psnr = std::numeric_limits<double>::quiet_NaN();
  bool dvg = false;               // diverged, or negative PSNR
};

/// Runs the configured solver on an already measured problem.
inline RecoveryResult run_solver(const ExperimentConfig& cfg, const MeasurementEnsemble& e, const RVec& y,
                                 const CompressionCode& code, const CVec& init, const TruthSignal& t) {
  SolverConfig sc;
  sc.max_iterations = cfg.iteration_count();
  sc.divergence_factor = cfg.divergence_factor;
  sc.record_trajectory = true;
  sc.truth = t.x;
  sc.image_metrics = t.image;
  if (cfg.solver.kind == "wf") return wirtinger_flow(e, y, init, sc);
  if (cfg.solver.kind == "coper") {
    coper::detail::Stopwatch clock;
    RecoveryResult r;
    r.estimate = coper_exhaustive(e, y, enumerate_codebook(code));
    r.iterations = 1;
    r.trajectory.push_back(coper::detail::make_point(1, r.estimate, r.estimate.norm(), sc));
    r.wall_time = clock.seconds();
    return r;
  }
  return gd_coper(e, y, code, StepSchedule(parse_schedule_mode(cfg.solver.schedule), e.rows()), init, sc);
}

inline SeedRun summarize_run(std::uint64_t seed, const MeasurementEnsemble& e, const TruthSignal& t,
                             RecoveryResult r) {
  SeedRun s;
  s.seed = seed;
  s.m = e.rows();
  s.n = e.cols();
  const double xn2 = t.x.squaredNorm();
  if (r.diverged || r.trajectory.empty()) {
    s.error = std::numeric_limits<double>::infinity();
    s.normalized_error = std::numeric_limits<double>::infinity();
  } else {
    s.error = phase_aligned_distance(t.x, r.estimate);
    s.normalized_error = s.error * s.error / xn2;
    if (t.image) s.psnr = psnr_phase_aligned(t.x.real(), r.estimate);
  }
  s.dvg = r.diverged || (t.image && s.psnr < 0.0);
  s.result = std::move(r);
  return s;
}

inline SeedRun run_seed(const ExperimentConfig& cfg, std::uint64_t seed,
                        std::size_t cache_bytes = coper::detail::default_cache_bytes()) {
  const TruthSignal t = make_signal(cfg, seed);
  const auto e = make_ensemble(cfg, t.x.size(), seed, cache_bytes);
  const RVec y = e->apply(t.x).cwiseAbs();
  const auto code = make_code(cfg, t);
  const CVec init = make_init(cfg, *e, y, t, seed);
  return summarize_run(seed, *e, t, run_solver(cfg, *e, y, *code, init, t));
}

/// Applies `work(i)` for i in [0, count) on up to `workers` threads. The
/// first exception thrown by any task is rethrown after all threads join.
template <class Fn>
void parallel_for(std::size_t count, std::size_t workers, Fn&& work) {
  workers = std::max<std::size_t>(1, std::min(workers, count));
  if (workers == 1) {
    for (std::size_t i = 0; i < count; ++i) work(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  std::vector<std::thread> pool;
  for (std::size_t w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < count; i = next++) {
        try {
          work(i);
        } catch (...) {
          std::lock_guard lock(failure_mutex);
          if (!failure) failure = std::current_exception();
        }
      }
    });
  }
  for (auto& th : pool) th.join();
  if (failure) std::rethrow_exception(failure);
}

struct ExperimentReport {
  ExperimentConfig config;
  std::string output_dir;
  std::vector<SeedRun> runs;  // in config seed order

  std::size_t dvg_count() const {
    std::size_t c = 0;
    for (const auto& r : runs) c += r.dvg ? 1 : 0;
    return c;
  }
};

// Writers --------------------------------------------------------------------

inline void write_header(std::ostream& os, const char* schema, const ExperimentConfig& cfg) {
  os << schema << '\n' << "# config: " << to_json_string(cfg) << '\n';
}

inline void write_results_csv(std::ostream& os, const ExperimentReport& rep) {
  write_header(os, kResultsSchema, rep.config);
  os << "seed,solver,ensemble,m,n,iterations,error,normalized_error,psnr,dvg\n";
  for (const auto& r : rep.runs) {
    os << r.seed << ',' << rep.config.solver.kind << ',' << rep.config.ensemble.kind << ',' << r.m << ',' << r.n
       << ',' << r.result.iterations << ',' << fmt(r.error) << ',' << fmt(r.normalized_error) << ','
       << fmt(r.psnr) << ',' << (r.dvg ? 1 : 0) << '\n';
  }
}

inline void write_trajectory_csv(std::ostream& os, const ExperimentReport& rep) {
  write_header(os, kTrajectorySchema, rep.config);
  os << "seed,iteration,error,normalized_error,psnr,norm\n";
  for (const auto& r : rep.runs) {
    const TruthSignal t = make_signal(rep.config, r.seed);
    const double xn2 = t.x.squaredNorm();
    for (const auto& p : r.result.trajectory) {
      os << r.seed << ',' << p.iteration << ',' << fmt(p.error) << ',' << fmt(p.error * p.error / xn2) << ','
         << fmt(p.psnr) << ',' << fmt(p.norm) << '\n';
    }
  }
}

inline void write_timings_csv(std::ostream& os, const ExperimentReport& rep) {
  write_header(os, kTimingsSchema, rep.config);
  os << "seed,wall_time_s\n";
  for (const auto& r : rep.runs) os << r.seed << ',' << fmt(r.result.wall_time) << '\n';
}

inline void write_summary(std::ostream& os, const ExperimentReport& rep) {
  const auto& c = rep.config;
  os << "experiment  " << c.name << '\n'
     << "solver      " << c.solver.kind << (c.solver.kind == "gd-coper" ? " (" + c.solver.schedule + ")" : "")
     << '\n'
     << "ensemble    " << c.ensemble.kind
     << (c.ensemble.kind == "cdp" ? " L=" + std::to_string(c.ensemble.masks) : " m/n=" + fmt(c.ensemble.ratio))
     << '\n'
     << "code        " << c.code.kind << '\n'
     << "init        " << c.init.kind << '\n'
     << "runs        " << rep.runs.size() << " (" << rep.dvg_count() << " DVG)\n";
  double psnr_sum = 0.0, err_sum = 0.0, time_sum = 0.0;
  std::size_t ok = 0;
  for (const auto& r : rep.runs) {
    time_sum += r.result.wall_time;
    if (r.dvg) continue;
    ++ok;
    err_sum += r.normalized_error;
    if (std::isfinite(r.psnr)) psnr_sum += r.psnr;
  }
  if (ok > 0) {
    if (c.signal.kind == "image") os << "mean psnr   " << fmt_fixed(psnr_sum / double(ok)) << " dB (non-DVG runs)\n";
    os << "mean nmse   " << fmt(err_sum / double(ok)) << " (non-DVG runs)\n";
  }
  os << "runtime     " << fmt_fixed(time_sum, 1) << " s total\n";
  for (const auto& r : rep.runs) {
    os << "  seed " << r.seed << ": ";
    if (r.dvg) {
      os << "DVG";
    } else if (c.signal.kind == "image") {
      os << fmt_fixed(r.psnr) << " dB";
    } else {
      os << "error " << fmt(r.error);
    }
    os << ", " << r.result.iterations << " iterations\n";
  }
}

inline void write_file(const std::filesystem::path& p, const std::function<void(std::ostream&)>& body) {
  std::ofstream f(p, std::ios::binary);
  if (!f) throw ParseError("cannot write '" + p.string() + "'");
  body(f);
}

inline void write_report(const ExperimentReport& rep) {
  namespace fs = std::filesystem;
  const fs::path dir(rep.output_dir);
  fs::create_directories(dir);
  write_file(dir / "results.csv", [&](std::ostream& os) { write_results_csv(os, rep); });
  if (rep.config.trajectory) {
    write_file(dir / "trajectory.csv", [&](std::ostream& os) { write_trajectory_csv(os, rep); });
  }
  write_file(dir / "timings.csv", [&](std::ostream& os) { write_timings_csv(os, rep); });
  write_file(dir / "summary.txt", [&](std::ostream& os) { write_summary(os, rep); });
}

/// Validates, runs every seed (across `workers` threads, each with its own
/// ensemble and a share of the row cache) and, when `write` is set, writes
/// the report files. Divergent runs are data, not errors.
inline ExperimentReport run_experiment(const ExperimentConfig& cfg, bool write = true) {
  cfg.validate();
  ExperimentReport rep{cfg, resolved_output_dir(cfg), std::vector<SeedRun>(cfg.seeds.size())};
  const auto workers = static_cast<std::size_t>(cfg.workers);
  const std::size_t cache = coper::detail::default_cache_bytes() / std::min(workers, cfg.seeds.size());
  parallel_for(cfg.seeds.size(), workers, [&](std::size_t i) { rep.runs[i] = run_seed(cfg, cfg.seeds[i], cache); });
  if (write) write_report(rep);
  return rep;
}

/// Recovers the config embedded in a report file's header.
inline ExperimentConfig config_from_report(std::istream& is) {
  std::string line;
  std::getline(is, line);
  if (line.rfind("# coper-", 0) != 0) throw ParseError("report: missing schema line");
  std::getline(is, line);
  const std::string tag = "# config: ";
  if (line.rfind(tag, 0) != 0) throw ParseError("report: missing embedded config");
  return parse_config(line.substr(tag.size()));
}

// Comparison ------------------------------------------------------------------

struct ComparisonRow {
  std::uint64_t seed = 0;
  SeedRun a;
  SeedRun b;
};

struct ComparisonReport {
  ExperimentConfig a;
  ExperimentConfig b;
  std::string output_dir;
  std::vector<ComparisonRow> rows;
};

/// Throws ArgumentError unless both configs measure the same signal with
/// the same ensemble and seeds.
inline void require_comparable(const ExperimentConfig& a, const ExperimentConfig& b) {
  std::vector<std::string> p;
  if (!(a.signal == b.signal)) p.push_back("signal differs");
  if (!(a.ensemble == b.ensemble)) p.push_back("ensemble differs");
  if (a.seeds != b.seeds) p.push_back("seeds differ");
  if (!p.empty()) {
    std::string msg = "compare_solvers: mismatched configs:";
    for (const auto& s : p) msg += " " + s + ";";
    throw ArgumentError(msg);
  }
}

inline std::string signal_label(const ExperimentConfig& c) {
  if (c.signal.kind == "image") return std::filesystem::path(c.signal.path).stem().string();
  return "sparse-n" + std::to_string(c.signal.n) + "-k" + std::to_string(c.signal.k);
}

inline void write_comparison_csv(std::ostream& os, const ComparisonReport& rep) {
  os << kComparisonSchema << '\n'
     << "# config a: " << to_json_string(rep.a) << '\n'
     << "# config b: " << to_json_string(rep.b) << '\n'
     << "signal,ensemble,m_over_n,seed,solver_a,solver_b,psnr_a,psnr_b,psnr_diff,error_a,error_b,dvg_a,dvg_b\n";
  const std::string label = signal_label(rep.a);
  for (const auto& r : rep.rows) {
    const double ratio = static_cast<double>(r.a.m) / static_cast<double>(r.a.n);
    os << label << ',' << rep.a.ensemble.kind << ',' << fmt(ratio) << ',' << r.seed << ',' << rep.a.solver.kind
       << ',' << rep.b.solver.kind << ',' << fmt(r.a.psnr) << ',' << fmt(r.b.psnr) << ','
       << fmt(r.a.psnr - r.b.psnr) << ',' << fmt(r.a.error) << ',' << fmt(r.b.error) << ',' << (r.a.dvg ? 1 : 0)
       << ',' << (r.b.dvg ? 1 : 0) << '\n';
  }
}

inline void write_comparison_timings(std::ostream& os, const ComparisonReport& rep) {
  os << kTimingsSchema << '\n' << "seed,wall_time_a_s,wall_time_b_s\n";
  for (const auto& r : rep.rows) os << r.seed << ',' << fmt(r.a.result.wall_time) << ',' << fmt(r.b.result.wall_time) << '\n';
}

inline void write_comparison_summary(std::ostream& os, const ComparisonReport& rep) {
  os << "compare     " << rep.a.name << " vs " << rep.b.name << '\n'
     << "signal      " << signal_label(rep.a) << '\n';
  for (const auto& r : rep.rows) {
    auto side = [&](const SeedRun& s) {
      return s.dvg ? std::string("DVG") : (std::isfinite(s.psnr) ? fmt_fixed(s.psnr) + " dB" : "error " + fmt(s.error));
    };
    os << "  seed " << r.seed << ": " << rep.a.solver.kind << ' ' << side(r.a) << ", " << rep.b.solver.kind << ' '
       << side(r.b) << " (" << fmt_fixed(r.a.result.wall_time, 1) << " s vs " << fmt_fixed(r.b.result.wall_time, 1) << " s)\n";
  }
}

/// Runs both solvers on the same measurements seed by seed (the ensemble is
/// built once per seed and shared) and writes comparison.csv,
/// timings.csv and summary.txt to a's output directory.
inline ComparisonReport compare_solvers(const ExperimentConfig& a, const ExperimentConfig& b, bool write = true) {
  a.validate();
  b.validate();
  require_comparable(a, b);
  ComparisonReport rep{a, b, resolved_output_dir(a), std::vector<ComparisonRow>(a.seeds.size())};
  const auto workers = static_cast<std::size_t>(a.workers);
  const std::size_t cache = coper::detail::default_cache_bytes() / std::min(workers, a.seeds.size());
  parallel_for(a.seeds.size(), workers, [&](std::size_t i) {
    const std::uint64_t seed = a.seeds[i];
    const TruthSignal t = make_signal(a, seed);
    const auto e = make_ensemble(a, t.x.size(), seed, cache);
    const RVec y = e->apply(t.x).cwiseAbs();
    auto side = [&](const ExperimentConfig& c) {
      const auto code = make_code(c, t);
      return summarize_run(seed, *e, t, run_solver(c, *e, y, *code, make_init(c, *e, y, t, seed), t));
    };
    rep.rows[i] = {seed, side(a), side(b)};
  });
  if (write) {
    namespace fs = std::filesystem;
    const fs::path dir(rep.output_dir);
    fs::create_directories(dir);
    write_file(dir / "comparison.csv", [&](std::ostream& os) { write_comparison_csv(os, rep); });
    write_file(dir / "timings.csv", [&](std::ostream& os) { write_comparison_timings(os, rep); });
    write_file(dir / "summary.txt", [&](std::ostream& os) { write_comparison_summary(os, rep); });
  }
  return rep;
}

}  // namespace coper::harness
