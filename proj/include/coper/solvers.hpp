// Copyright 2026 The coper Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "coper/compression.hpp"
#include "coper/core.hpp"
#include "coper/measurement.hpp"
#include "coper/objective.hpp"
#include "coper/random.hpp"
#include "coper/signal.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace coper {

enum class ScheduleMode { TheoryConstant, GaussianPractical, CdpPractical, WfSaturating };

inline ScheduleMode parse_schedule_mode(const std::string& s) {
  if (s == "theory-constant") return ScheduleMode::TheoryConstant;
  if (s == "gaussian-practical") return ScheduleMode::GaussianPractical;
  if (s == "cdp-practical") return ScheduleMode::CdpPractical;
  if (s == "wf-saturating") return ScheduleMode::WfSaturating;
  throw ArgumentError("unknown schedule mode '" + s + "'");
}

inline std::string to_string(ScheduleMode m) {
  switch (m) {
    case ScheduleMode::TheoryConstant: return "theory-constant";
    case ScheduleMode::GaussianPractical: return "gaussian-practical";
    case ScheduleMode::CdpPractical: return "cdp-practical";
    case ScheduleMode::WfSaturating: return "wf-saturating";
  }
  return "?";
}

/// One schedule entry. With `relative` set the step is
/// factor * ||z_t|| / ||grad d_A(z_t)||, otherwise factor itself.
/// `quality`, when present, selects the code's quality layer for this step.
struct ScheduleStep {
  double factor = 0.0;
  bool relative = false;
  std::optional<double> quality;
};

/// min(1 - e^{-t/t0}, mu_max).
inline double wf_step(std::size_t t, double t0 = 330.0, double mu_max = 0.4) {
  return std::min(1.0 - std::exp(-static_cast<double>(t) / t0), mu_max);
}

class StepSchedule {
 public:
  StepSchedule(ScheduleMode mode, Eigen::Index m, std::optional<double> theory_quality = std::nullopt)
      : mode_(mode), m_(m), theory_quality_(theory_quality) {
    if (mode == ScheduleMode::TheoryConstant && m < 1) throw ArgumentError("StepSchedule: m must be positive");
  }

  static StepSchedule theory(Eigen::Index m) { return {ScheduleMode::TheoryConstant, m}; }

  ScheduleMode mode() const noexcept { return mode_; }

  ScheduleStep operator()(std::size_t t) const {
    if (t < 1) throw ArgumentError("StepSchedule: iterations are numbered from 1");
    switch (mode_) {
      case ScheduleMode::TheoryConstant:
        return {1.0 / (8.0 * static_cast<double>(m_)), false, theory_quality_};
      case ScheduleMode::GaussianPractical:
        return t <= 10 ? ScheduleStep{0.2, true, 40.0} : ScheduleStep{0.02, true, 0.0};
      case ScheduleMode::CdpPractical: {
        const double f = std::max(std::exp(0.7 - 0.41 * static_cast<double>(t)), 0.02);
        const double q = t <= 5 ? 50.0 : (t <= 30 ? 20.0 : 0.0);
        return {f, true, q};
      }
      case ScheduleMode::WfSaturating:
        return {wf_step(t, t0, mu_max), false, std::nullopt};
    }
    throw ArgumentError("StepSchedule: unknown mode");
  }

  double t0 = 330.0;
  double mu_max = 0.4;

 private:
  ScheduleMode mode_;
  Eigen::Index m_;
  std::optional<double> theory_quality_;
};

inline ScheduleStep gd_coper_schedule(ScheduleMode mode, std::size_t t, Eigen::Index m = 1) {
  return StepSchedule(mode, m)(t);
}

struct SolverConfig {
  std::size_t max_iterations = 50;
  double divergence_factor = 1e6;  // DVG once ||z|| > factor * ||z_0||
  bool record_trajectory = true;
  std::optional<CVec> truth;       // enables error / PSNR columns
  bool image_metrics = false;      // truth is an 8-bit image: also record PSNR

  static SolverConfig gd_coper_defaults() { return {}; }
  static SolverConfig wf_defaults() {
    SolverConfig c;
    c.max_iterations = 300;
    return c;
  }

  void validate() const {
    if (max_iterations < 1) throw ArgumentError("SolverConfig: max_iterations must be >= 1");
    if (!(divergence_factor > 0.0)) throw ArgumentError("SolverConfig: divergence threshold must be positive");
  }
};

namespace detail {

inline TrajectoryPoint make_point(std::size_t t, const CVec& z, double norm, const SolverConfig& cfg) {
  TrajectoryPoint p;
  p.iteration = t;
  p.norm = norm;
  if (cfg.truth && std::isfinite(norm)) {
    p.error = phase_aligned_distance(*cfg.truth, z);
    if (cfg.image_metrics) p.psnr = psnr_phase_aligned(cfg.truth->real(), z);
  }
  return p;
}

inline bool all_finite(const CVec& v) {
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    if (!std::isfinite(v[i].real()) || !std::isfinite(v[i].imag())) return false;
  }
  return true;
}

inline double divergence_threshold(const SolverConfig& cfg, double z0_norm) {
  return cfg.divergence_factor * (z0_norm > 0.0 ? z0_norm : 1.0);
}

class Stopwatch {
 public:
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
  }

 private:
  std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
};

}  // namespace detail

/// Index of the codeword minimizing d_A; the lowest index wins ties.
inline std::size_t coper_exhaustive_index(const MeasurementEnsemble& e, const RVec& y,
                                          const std::vector<CVec>& codebook) {
  if (codebook.empty()) throw EmptyInputError("coper_exhaustive: empty codebook");
  std::size_t best = 0;
  double best_d = d_A(e, y, codebook[0]);
  for (std::size_t i = 1; i < codebook.size(); ++i) {
    const double d = d_A(e, y, codebook[i]);
    if (d < best_d) {
      best_d = d;
      best = i;
    }
  }
  return best;
}

inline ComplexSignal coper_exhaustive(const MeasurementEnsemble& e, const RVec& y, const std::vector<CVec>& codebook) {
  return ComplexSignal(codebook[coper_exhaustive_index(e, y, codebook)]);
}

/// Projected gradient descent: s = z - mu grad d_A(z), z = D(E(s)).
/// Divergence is judged on s, since projection may mask it.
inline RecoveryResult gd_coper(const MeasurementEnsemble& e, const RVec& y, const CompressionCode& code,
                               const StepSchedule& schedule, const CVec& init, const SolverConfig& cfg) {
  cfg.validate();
  require_same_size(init.size(), e.cols(), "gd_coper");
  require_same_size(y.size(), e.rows(), "gd_coper");
  detail::Stopwatch clock;
  RecoveryResult res;
  CVec z = init;
  const double threshold = detail::divergence_threshold(cfg, init.norm());
  if (cfg.record_trajectory) res.trajectory.push_back(detail::make_point(0, z, z.norm(), cfg));

  std::map<double, std::unique_ptr<CompressionCode>> layers;
  auto layer = [&](const std::optional<double>& q) -> const CompressionCode& {
    if (!q || !code.has_quality()) return code;
    auto& slot = layers[*q];
    if (!slot) slot = code.at_quality(*q);
    return *slot;
  };

  for (std::size_t t = 1; t <= cfg.max_iterations; ++t) {
    const ScheduleStep step = schedule(t);
    const CVec g = grad_d_A(e, y, z);
    double mu = step.factor;
    if (step.relative) {
      const double gn = g.norm();
      mu = gn == 0.0 ? 0.0 : step.factor * z.norm() / gn;
    }
    const CVec s = z - mu * g;
    const double sn = s.norm();
    res.iterations = t;
    if (!detail::all_finite(s) || !(sn <= threshold)) {
      res.diverged = true;
      if (cfg.record_trajectory) res.trajectory.push_back(detail::make_point(t, s, sn, cfg));
      break;
    }
    z = project(layer(step.quality), s);
    if (cfg.record_trajectory) res.trajectory.push_back(detail::make_point(t, z, z.norm(), cfg));
  }
  res.estimate = ComplexSignal(z);
  res.wall_time = clock.seconds();
  return res;
}

/// Wirtinger Flow on (1/2m) sum (|a~_k^* z|^2 - y~_k^2)^2 with rows
/// rescaled so that E[a~ a~^*] = I (a~ = a / sqrt(entry energy)); the
/// step mu_t / ||z_0||^2 follows the saturating schedule.
inline RecoveryResult wirtinger_flow(const MeasurementEnsemble& e, const RVec& y, const CVec& init,
                                     const SolverConfig& cfg, double t0 = 330.0, double mu_max = 0.4) {
  cfg.validate();
  require_same_size(init.size(), e.cols(), "wirtinger_flow");
  require_same_size(y.size(), e.rows(), "wirtinger_flow");
  const double z0n2 = init.squaredNorm();
  if (z0n2 == 0.0) throw ArgumentError("wirtinger_flow: zero initialization");
  detail::Stopwatch clock;
  RecoveryResult res;
  CVec z = init;
  const double threshold = detail::divergence_threshold(cfg, std::sqrt(z0n2));
  const double sigma2 = e.entry_energy();
  const double scale = 1.0 / (2.0 * static_cast<double>(e.rows()) * sigma2 * sigma2 * z0n2);
  if (cfg.record_trajectory) res.trajectory.push_back(detail::make_point(0, z, z.norm(), cfg));

  for (std::size_t t = 1; t <= cfg.max_iterations; ++t) {
    const CVec g = grad_d_A(e, y, z);
    const CVec next = z - (wf_step(t, t0, mu_max) * scale) * g;
    const double nn = next.norm();
    res.iterations = t;
    if (!detail::all_finite(next) || !(nn <= threshold)) {
      res.diverged = true;
      if (cfg.record_trajectory) res.trajectory.push_back(detail::make_point(t, next, nn, cfg));
      break;
    }
    z = next;
    if (cfg.record_trajectory) res.trajectory.push_back(detail::make_point(t, z, nn, cfg));
  }
  res.estimate = ComplexSignal(z);
  res.wall_time = clock.seconds();
  return res;
}

/// Leading eigenvector of (1/m) sum_k y_k^2 a_k a_k^* by power iteration,
/// scaled to the norm estimate sqrt(||y||^2 / (m * entry energy)). For the
/// Gaussian ensemble that estimate is estimate_norm(y, m).
inline CVec spectral_init(const MeasurementEnsemble& e, const RVec& y, std::uint64_t seed = 0,
                          std::size_t max_iterations = 200, double tolerance = 1e-8) {
  require_same_size(y.size(), e.rows(), "spectral_init");
  if (e.rows() < 1) throw EmptyInputError("spectral_init: no measurements");
  if (y.squaredNorm() == 0.0) throw DegenerateError("spectral_init: all observations are zero");
  const double inv_m = 1.0 / static_cast<double>(e.rows());
  auto op = [&](const CVec& v) {
    return CVec(inv_m * e.weighted_adjoint(v, [&y](Eigen::Index k, Complex a) { return (y[k] * y[k]) * a; }));
  };

  NormalStream rng(derive_seed(seed, {0x5bec7a1ULL}));
  CVec v(e.cols());
  for (Eigen::Index j = 0; j < v.size(); ++j) {
    const double re = rng();
    v[j] = Complex(re, rng());
  }
  v.normalize();
  for (std::size_t it = 0; it < max_iterations; ++it) {
    CVec w = op(v);
    const double wn = w.norm();
    if (wn == 0.0) break;
    const Complex rayleigh = v.dot(w);
    const double residual = (w - rayleigh * v).norm() / wn;
    v = w / wn;
    if (residual < tolerance) break;
  }
  const double scale = std::sqrt(y.squaredNorm() * inv_m / e.entry_energy());
  return scale * v;
}

/// lambda * white + (1 - lambda) * truth.
inline CVec blended_init(const CVec& white, const CVec& truth, double lambda) {
  require_same_size(white.size(), truth.size(), "blended_init");
  if (!(lambda >= 0.0 && lambda <= 1.0)) throw ArgumentError("blended_init: lambda must lie in [0, 1]");
  if (lambda == 0.0) return truth;
  if (lambda == 1.0) return white;
  return lambda * white + (1.0 - lambda) * truth;
}

}  // namespace coper
