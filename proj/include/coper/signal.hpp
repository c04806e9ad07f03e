// Copyright 2026 The coper Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "coper/core.hpp"
#include "coper/random.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <vector>

namespace coper {

/// inf over theta of ||e^{i theta} x - y||^2, in closed form
/// ||x||^2 + ||y||^2 - 2 |x^* y|.
inline double phase_aligned_sq_distance(const CVec& x, const CVec& y) {
  require_same_size(x.size(), y.size(), "phase_aligned_sq_distance");
  const double nx = x.squaredNorm();
  const double ny = y.squaredNorm();
  const double cross = std::abs(x.dot(y));  // Eigen's dot conjugates the left operand
  return std::max(0.0, nx + ny - 2.0 * cross);
}

inline double phase_aligned_distance(const CVec& x, const CVec& y) {
  return std::sqrt(phase_aligned_sq_distance(x, y));
}

/// Rotates `estimate` by the global phase that best aligns it with `reference`.
inline CVec align_phase(const CVec& reference, const CVec& estimate) {
  require_same_size(reference.size(), estimate.size(), "align_phase");
  const Complex inner = estimate.dot(reference);  // estimate^* reference
  if (std::abs(inner) == 0.0) return estimate;
  return estimate * (inner / std::abs(inner));
}

/// 20 log10(255 / sqrt(MSE)). Peak fixed at 255 regardless of image size.
inline double psnr(const RVec& original, const RVec& estimate) {
  require_same_size(original.size(), estimate.size(), "psnr");
  if (original.size() == 0) throw EmptyInputError("psnr: empty image");
  const double mse = (original - estimate).squaredNorm() / static_cast<double>(original.size());
  if (mse == 0.0) return std::numeric_limits<double>::infinity();
  return 20.0 * std::log10(255.0 / std::sqrt(mse));
}

/// PSNR of a complex estimate against a real image after removing the
/// global phase; only the real part of the aligned estimate is scored.
inline double psnr_phase_aligned(const RVec& original, const CVec& estimate) {
  const CVec aligned = align_phase(original.cast<Complex>(), estimate);
  return psnr(original, aligned.real());
}

/// sqrt(||y||^2 / (2m)): consistent estimate of ||x|| under complex
/// Gaussian rows with E|a_k^* x|^2 = 2 ||x||^2.
inline double estimate_norm(const RVec& y, Eigen::Index m) {
  if (m <= 0) throw EmptyInputError("estimate_norm: m must be positive");
  require_same_size(y.size(), m, "estimate_norm");
  return std::sqrt(y.squaredNorm() / (2.0 * static_cast<double>(m)));
}

inline double estimate_norm(const PhaselessObservations& y) {
  return estimate_norm(y.values(), y.size());
}

/// Vector of i.i.d. N(0,1) + iN(0,1) entries drawn from stream `key`.
inline CVec random_complex(Eigen::Index n, std::uint64_t key) {
  NormalStream rng(key);
  CVec v(n);
  for (Eigen::Index j = 0; j < n; ++j) {
    const double re = rng();
    v[j] = Complex(re, rng());
  }
  return v;
}

/// Unit-norm complex vector with exactly k nonzero entries on a uniformly
/// random support.
inline CVec random_sparse_unit(Eigen::Index n, Eigen::Index k, std::uint64_t key) {
  if (k < 1 || k > n) throw ArgumentError("random_sparse_unit: need 1 <= k <= n");
  NormalStream rng(key);
  std::vector<Eigen::Index> idx(static_cast<std::size_t>(n));
  std::iota(idx.begin(), idx.end(), Eigen::Index{0});
  for (Eigen::Index i = 0; i < k; ++i) {  // partial Fisher-Yates
    const auto span = static_cast<double>(n - i);
    const auto j = i + std::min(static_cast<Eigen::Index>(rng.uniform() * span), n - i - 1);
    std::swap(idx[static_cast<std::size_t>(i)], idx[static_cast<std::size_t>(j)]);
  }
  CVec v = CVec::Zero(n);
  for (Eigen::Index i = 0; i < k; ++i) {
    const double re = rng();
    v[idx[static_cast<std::size_t>(i)]] = Complex(re, rng());
  }
  return v / v.norm();
}

/// Unit vector at phase-aligned distance `d` (0 <= d <= sqrt 2) from unit
/// x: cos(phi) x + sin(phi) w with unit w orthogonal to x.
inline CVec perturb_to_distance(const CVec& x, double d, std::uint64_t key) {
  if (!(d >= 0.0 && d <= std::sqrt(2.0))) throw ArgumentError("perturb_to_distance: d must lie in [0, sqrt 2]");
  if (x.size() < 2) throw ArgumentError("perturb_to_distance: need n >= 2");
  CVec w = random_complex(x.size(), key);
  w -= x.dot(w) * x;
  w.normalize();
  const double c = 1.0 - 0.5 * d * d;
  return c * x + std::sqrt(std::max(0.0, 1.0 - c * c)) * w;
}

struct TrajectoryPoint {
  std::size_t iteration = 0;
  double error = std::numeric_limits<double>::quiet_NaN();  // phase-aligned distance to truth
  double psnr = std::numeric_limits<double>::quiet_NaN();
  double norm = 0.0;  // ||z_t||
};

struct RecoveryResult {
  ComplexSignal estimate;
  std::vector<TrajectoryPoint> trajectory;
  bool diverged = false;
  double wall_time = 0.0;  // seconds
  std::size_t iterations = 0;
};

}  // namespace coper
