// Copyright 2026 The coper Authors.
// SPDX-License-Identifier: Apache-2.0

#include "coper/measurement.hpp"
#include "coper/signal.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <cstring>
#include <numbers>

namespace coper {
namespace {

// Explicit matrix of a coded-diffraction ensemble built straight from the
// defining formula, independent of the ensemble's own kernels.
Eigen::MatrixXcd cdp_matrix(const CodedDiffractionEnsemble& e) {
  const Eigen::Index n = e.cols(), l = e.mask_count();
  Eigen::MatrixXcd a(n * l, n);
  for (Eigen::Index p = 0; p < l; ++p)
    for (Eigen::Index i = 0; i < n; ++i)
      for (Eigen::Index k = 0; k < n; ++k)
        a(p * n + i, k) = std::cos(i * std::numbers::pi / double(n) * (k + 0.5)) * double(e.mask(p, k));
  return a;
}

double rel_adjoint_gap(const MeasurementEnsemble& e, std::uint64_t s) {
  const CVec x = random_complex(e.cols(), derive_seed(s, {1}));
  const CVec v = random_complex(e.rows(), derive_seed(s, {2}));
  const Complex lhs = e.apply(x).dot(v);       // <Ax, v>
  const Complex rhs = x.dot(e.adjoint_apply(v));  // <x, A^* v>
  return std::abs(lhs - rhs) / std::max(std::abs(lhs), 1e-300);
}

TEST(Gaussian, DeterministicUnderSeed) {
  const GaussianEnsemble a(3, 2, 1), b(3, 2, 1);
  EXPECT_EQ(a.rows(), 3);
  EXPECT_EQ(a.cols(), 2);
  const Eigen::MatrixXcd ma = a.materialize(), mb = b.materialize();
  EXPECT_EQ(0, std::memcmp(ma.data(), mb.data(), sizeof(Complex) * 6));
  const GaussianEnsemble c(3, 2, 2);
  EXPECT_NE(c.materialize(), ma);
}

TEST(Gaussian, CachedAndStreamedRowsAgree) {
  const GaussianEnsemble cached(40, 6, 9), streamed(40, 6, 9, 0);
  EXPECT_EQ(cached.cached_rows(), 40);
  EXPECT_EQ(streamed.cached_rows(), 0);
  const CVec x = random_complex(6, 4);
  EXPECT_EQ(cached.apply(x), streamed.apply(x));
  const CVec v = random_complex(40, 5);
  EXPECT_EQ(cached.adjoint_apply(v), streamed.adjoint_apply(v));
}

TEST(Gaussian, EntryMoments) {
  const GaussianEnsemble a(10000, 1, 2);
  const Eigen::MatrixXcd m = a.materialize();
  const double mean = m.real().mean();
  const double var = (m.real().array() - mean).square().sum() / (10000 - 1);
  EXPECT_GE(var, 0.94);
  EXPECT_LE(var, 1.06);
  EXPECT_NEAR(mean, 0.0, 0.03);
  EXPECT_NEAR(m.imag().mean(), 0.0, 0.03);
  EXPECT_DOUBLE_EQ(a.entry_energy(), 2.0);
}

TEST(Gaussian, ZeroDimensionThrows) {
  EXPECT_THROW(sample_gaussian(0, 5, 0), ArgumentError);
  EXPECT_THROW(sample_gaussian(5, 0, 0), ArgumentError);
}

TEST(Gaussian, ApplyIsLinear) {
  const GaussianEnsemble a(20, 7, 3);
  const CVec x = random_complex(7, 8);
  const Complex alpha(0.3, -1.7);
  EXPECT_EQ(a.apply(CVec::Zero(7)), CVec::Zero(20));
  EXPECT_LT((a.apply(alpha * x) - alpha * a.apply(x)).norm() / a.apply(x).norm(), 1e-12);
}

TEST(Gaussian, ApplyMatchesMaterializedMatrix) {
  const GaussianEnsemble a(30, 5, 12);
  const CVec x = random_complex(5, 1);
  EXPECT_LT((a.apply(x) - a.materialize() * x).norm(), 1e-9 * x.norm());
}

TEST(Gaussian, AdjointIdentity) {
  const GaussianEnsemble a(12, 8, 5);
  for (std::uint64_t s = 0; s < 100; ++s) EXPECT_LT(rel_adjoint_gap(a, s), 1e-10);
}

TEST(Gaussian, WeightedAdjointMatchesTwoPass) {
  const GaussianEnsemble a(50, 6, 6, 0);
  const CVec z = random_complex(6, 10);
  auto f = [](Eigen::Index k, Complex v) { return (std::norm(v) - double(k)) * v; };
  CVec u = a.apply(z);
  for (Eigen::Index k = 0; k < u.size(); ++k) u[k] = f(k, u[k]);
  EXPECT_LT((a.weighted_adjoint(z, f) - a.adjoint_apply(u)).norm(), 1e-10 * u.norm());
}

TEST(Gaussian, DimensionMismatchThrows) {
  const GaussianEnsemble a(4, 3, 0);
  EXPECT_THROW(a.apply(CVec::Zero(4)), DimensionError);
  EXPECT_THROW(a.adjoint_apply(CVec::Zero(3)), DimensionError);
}

TEST(CodedDiffraction, MaskSupportAndShape) {
  const auto e = sample_coded_diffraction(4, 1, 3);
  EXPECT_EQ(e.rows(), 4);
  for (Eigen::Index k = 0; k < 4; ++k) {
    EXPECT_GE(e.mask(0, k), -1);
    EXPECT_LE(e.mask(0, k), 1);
  }
  EXPECT_THROW(sample_coded_diffraction(0, 1, 0), ArgumentError);
  EXPECT_THROW(sample_coded_diffraction(4, 0, 0), ArgumentError);
}

TEST(CodedDiffraction, MaskFrequencies) {
  const auto e = sample_coded_diffraction(10000, 1, 4);
  double zero = 0, plus = 0, minus = 0;
  for (Eigen::Index k = 0; k < 10000; ++k) {
    zero += e.mask(0, k) == 0;
    plus += e.mask(0, k) == 1;
    minus += e.mask(0, k) == -1;
  }
  EXPECT_GE(zero / 1e4, 0.485);
  EXPECT_LE(zero / 1e4, 0.515);
  const double se = std::sqrt(0.25 * 0.75 / 1e4);
  EXPECT_NEAR(plus / 1e4, 0.25, 3 * se);
  EXPECT_NEAR(minus / 1e4, 0.25, 3 * se);
}

TEST(CodedDiffraction, MeasurementCountIsNL) {
  const auto e = sample_coded_diffraction(256 * 256, 15, 5);
  EXPECT_EQ(e.rows(), 15 * 256 * 256);
  EXPECT_EQ(e.rows() / e.cols(), 15);
  EXPECT_TRUE(e.uses_fast_path());
}

TEST(CodedDiffraction, TwoPointKernelByHand) {
  Eigen::MatrixXi masks(1, 2);
  masks << 1, 1;
  const CodedDiffractionEnsemble e(masks);
  CVec x(2);
  x << Complex(0.7, -0.2), Complex(-1.1, 0.4);
  const CVec y = e.apply(x);
  const double pi = std::numbers::pi;
  EXPECT_NEAR(std::abs(y[0] - (x[0] + x[1])), 0.0, 1e-15);
  const Complex row1 = std::cos(pi / 2 * 0.5) * x[0] + std::cos(pi / 2 * 1.5) * x[1];
  EXPECT_NEAR(std::abs(y[1] - row1), 0.0, 1e-15);
}

TEST(CodedDiffraction, MatchesExplicitMatrixOracle) {
  for (Eigen::Index n : {1, 2, 5, 16, 33, 64}) {
    for (auto path : {CosinePath::Direct, CosinePath::Fast}) {
      const CodedDiffractionEnsemble e(n, 3, derive_seed(7, {std::uint64_t(n)}), path);
      const Eigen::MatrixXcd a = cdp_matrix(e);
      const CVec x = random_complex(n, 1);
      const CVec v = random_complex(3 * n, 2);
      EXPECT_LT((e.apply(x) - a * x).norm(), 1e-8 * std::max(1.0, x.norm())) << n;
      EXPECT_LT((e.adjoint_apply(v) - a.adjoint() * v).norm(), 1e-8 * std::max(1.0, v.norm())) << n;
    }
  }
}

TEST(CodedDiffraction, FastAndDirectPathsAgreeAboveDirectLimit) {
  const Eigen::Index n = 5000;
  const CodedDiffractionEnsemble fast(n, 1, 3, CosinePath::Fast), direct(n, 1, 3, CosinePath::Direct);
  const CVec x = random_complex(n, 4);
  EXPECT_LT((fast.apply(x) - direct.apply(x)).norm() / direct.apply(x).norm(), 1e-8);
}

TEST(CodedDiffraction, AdjointIdentity) {
  const auto e = sample_coded_diffraction(8, 3, 11);
  for (std::uint64_t s = 0; s < 100; ++s) EXPECT_LT(rel_adjoint_gap(e, s), 1e-10);
}

TEST(CodedDiffraction, EntryEnergyMatchesFrobeniusNorm) {
  const auto e = sample_coded_diffraction(24, 4, 2);
  const Eigen::MatrixXcd a = cdp_matrix(e);
  EXPECT_NEAR(e.entry_energy(), a.squaredNorm() / double(a.rows() * a.cols()), 1e-12);
}

TEST(Magnitudes, Examples) {
  const GaussianEnsemble a(9, 4, 1);
  EXPECT_EQ(magnitudes(a, CVec::Zero(4)).values(), RVec::Zero(9));
  const CVec x = random_complex(4, 3);
  const RVec y0 = magnitudes(a, x).values();
  const RVec y1 = magnitudes(a, std::polar(1.0, 0.83) * x).values();
  EXPECT_LT((y0 - y1).cwiseAbs().maxCoeff(), 1e-12 * y0.maxCoeff());

  Eigen::MatrixXcd m(1, 1);
  m << Complex(1, 1);
  const DenseEnsemble d(m);
  EXPECT_NEAR(magnitudes(d, CVec::Ones(1)).values()[0], std::sqrt(2.0), 1e-15);
}

TEST(Magnitudes, SeedDeterminism) {
  const CVec x = random_complex(6, 2);
  const RVec a = magnitudes(GaussianEnsemble(15, 6, 77), x).values();
  const RVec b = magnitudes(GaussianEnsemble(15, 6, 77), x).values();
  EXPECT_EQ(0, std::memcmp(a.data(), b.data(), sizeof(double) * 15));
  const RVec c = magnitudes(CodedDiffractionEnsemble(6, 2, 77), x).values();
  const RVec d = magnitudes(CodedDiffractionEnsemble(6, 2, 77), x).values();
  EXPECT_EQ(c, d);
}

}  // namespace
}  // namespace coper
