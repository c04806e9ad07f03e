// Copyright 2026 The coper Authors.
// SPDX-License-Identifier: Apache-2.0

#include "coper/measurement.hpp"
#include "coper/signal.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

namespace coper {
namespace {

CVec unit(Eigen::Index n, Eigen::Index j) {
  CVec v = CVec::Zero(n);
  v[j] = 1.0;
  return v;
}

// Brute-force oracle: sweep theta over a fine grid, then refine around the best cell.
double grid_min_sq_distance(const CVec& x, const CVec& y) {
  auto f = [&](double th) { return (std::polar(1.0, th) * x - y).squaredNorm(); };
  const int pts = 10000;
  double best = f(0.0), best_th = 0.0;
  for (int i = 1; i < pts; ++i) {
    const double th = 2.0 * std::numbers::pi * i / pts;
    if (const double v = f(th); v < best) best = v, best_th = th;
  }
  double lo = best_th - 2.0 * std::numbers::pi / pts, hi = best_th + 2.0 * std::numbers::pi / pts;
  for (int it = 0; it < 200; ++it) {  // golden-section on a unimodal bracket
    const double a = lo + (hi - lo) * 0.381966, b = lo + (hi - lo) * 0.618034;
    if (f(a) < f(b)) {
      hi = b;
    } else {
      lo = a;
    }
  }
  return std::min(best, f(0.5 * (lo + hi)));
}

TEST(PhaseAlignedDistance, Examples) {
  const CVec x = random_complex(5, 11);
  EXPECT_EQ(phase_aligned_sq_distance(x, x), 0.0);
  EXPECT_NEAR(phase_aligned_sq_distance(unit(3, 0), Complex(0, 1) * unit(3, 0)), 0.0, 1e-15);
  EXPECT_DOUBLE_EQ(phase_aligned_sq_distance(unit(3, 0), unit(3, 1)), 2.0);
}

TEST(PhaseAlignedDistance, LengthMismatchThrows) {
  EXPECT_THROW(phase_aligned_sq_distance(CVec::Zero(3), CVec::Zero(4)), DimensionError);
}

TEST(PhaseAlignedDistance, InvariantUnderGlobalPhase) {
  for (std::uint64_t s = 0; s < 200; ++s) {
    const CVec x = random_complex(8, derive_seed(1, {s})).normalized();
    NormalStream rng(derive_seed(2, {s}));
    const double th = 2.0 * std::numbers::pi * rng.uniform();
    EXPECT_LT(phase_aligned_sq_distance(x, std::polar(1.0, th) * x), 1e-12);
  }
}

TEST(PhaseAlignedDistance, MatchesGridSearchOracle) {
  for (std::uint64_t s = 0; s < 50; ++s) {
    const CVec x = random_complex(6, derive_seed(3, {s}));
    const CVec y = random_complex(6, derive_seed(4, {s}));
    const double closed = phase_aligned_sq_distance(x, y);
    EXPECT_NEAR(closed, grid_min_sq_distance(x, y), 1e-6 * std::max(1.0, closed));
    EXPECT_LE(closed, (x - y).squaredNorm() + 1e-12);
    EXPECT_GE(closed, 0.0);
  }
}

TEST(PhaseAlignedDistance, CorrectPhaseInequality) {
  for (std::uint64_t s = 0; s < 10000; ++s) {
    const CVec x = random_complex(4, derive_seed(5, {s}));
    const CVec y = random_complex(4, derive_seed(6, {s})) * (0.1 + 0.001 * static_cast<double>(s % 2000));
    const double d2 = phase_aligned_sq_distance(x, y);
    const double nx = x.squaredNorm(), ny = y.squaredNorm(), c = std::norm(x.dot(y));
    const double rhs = 0.5 * (nx - ny) * (nx - ny) + (nx * ny - c);
    ASSERT_LE(d2 * d2 / 8.0, rhs * (1.0 + 1e-12) + 1e-14) << "pair " << s;
  }
}

TEST(AlignPhase, RotatesOntoReference) {
  const CVec x = random_complex(7, 21);
  const CVec y = std::polar(1.0, 2.1) * x;
  EXPECT_LT((align_phase(x, y) - x).norm(), 1e-12);
}

TEST(Psnr, Examples) {
  RVec img(4);
  img << 0, 128, 255, 64;
  EXPECT_TRUE(std::isinf(psnr(img, img)));
  EXPECT_NEAR(psnr(img, (img.array() + 255.0).matrix()), 0.0, 1e-12);
  EXPECT_NEAR(psnr(img, (img.array() + 1.0).matrix()), 20.0 * std::log10(255.0), 1e-12);
  EXPECT_NEAR(psnr(img, (img.array() + 1.0).matrix()), 48.1308, 1e-4);
}

TEST(Psnr, ShapeMismatchThrows) { EXPECT_THROW(psnr(RVec::Zero(4), RVec::Zero(5)), DimensionError); }

TEST(EstimateNorm, Examples) {
  EXPECT_EQ(estimate_norm(RVec::Zero(5), 5), 0.0);
  RVec y(2);
  y << std::sqrt(2.0), std::sqrt(2.0);
  EXPECT_DOUBLE_EQ(estimate_norm(y, 2), 1.0);
  EXPECT_THROW(estimate_norm(RVec(), 0), EmptyInputError);
}

TEST(EstimateNorm, GaussianEnsembleConcentrates) {
  const CVec x = random_complex(4, 99).normalized();
  const GaussianEnsemble a(10000, 4, 7);
  EXPECT_NEAR(estimate_norm(a.apply(x).cwiseAbs(), 10000), 1.0, 0.05);
}

TEST(ComplexSignal, RejectsNonFinite) {
  CVec v = CVec::Zero(3);
  v[1] = Complex(std::nan(""), 0.0);
  EXPECT_THROW(ComplexSignal{v}, ArgumentError);
}

TEST(PhaselessObservations, RejectsNegative) {
  RVec y(2);
  y << 1.0, -0.5;
  EXPECT_THROW(PhaselessObservations{y}, ArgumentError);
}

TEST(RandomSparseUnit, SupportAndNorm) {
  for (std::uint64_t s = 0; s < 100; ++s) {
    const CVec v = random_sparse_unit(20, 3, s);
    EXPECT_NEAR(v.norm(), 1.0, 1e-12);
    EXPECT_EQ((v.array().abs() > 0.0).count(), 3);
  }
  EXPECT_THROW(random_sparse_unit(4, 5, 0), ArgumentError);
}

TEST(PerturbToDistance, HitsRequestedDistance) {
  const CVec x = random_sparse_unit(16, 2, 5);
  for (double d : {0.0, 0.1, 0.5, 1.0, 1.4}) {
    const CVec z = perturb_to_distance(x, d, 17);
    EXPECT_NEAR(z.norm(), 1.0, 1e-12);
    EXPECT_NEAR(phase_aligned_distance(x, z), d, 1e-7);
  }
}

}  // namespace
}  // namespace coper
