// Copyright 2026 The coper Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "coper/core.hpp"
#include "coper/measurement.hpp"

#include <cmath>
#include <complex>

namespace coper {

/// d_A(x, c) = sum_k (y_k^2 - |a_k^* c|^2)^2, evaluated from the
/// observations alone. Terms are summed in row order in long double.
inline double d_A(const MeasurementEnsemble& e, const RVec& y, const CVec& c) {
  require_same_size(y.size(), e.rows(), "d_A");
  const CVec ac = e.apply(c);
  long double acc = 0.0L;
  for (Eigen::Index k = 0; k < ac.size(); ++k) {
    const long double r = static_cast<long double>(y[k]) * y[k] - static_cast<long double>(std::norm(ac[k]));
    acc += r * r;
  }
  return static_cast<double>(acc);
}

/// Wirtinger gradient 2 sum_k (|a_k^* z|^2 - y_k^2) a_k a_k^* z, i.e.
/// 2 A^*(w . Az) with w_k = |(Az)_k|^2 - y_k^2, in one pass over the rows.
inline CVec grad_d_A(const MeasurementEnsemble& e, const RVec& y, const CVec& z) {
  require_same_size(y.size(), e.rows(), "grad_d_A");
  return 2.0 * e.weighted_adjoint(z, [&y](Eigen::Index k, Complex v) {
           return (std::norm(v) - y[k] * y[k]) * v;
         });
}

/// The two nonzero eigenvalues of xx^* - cc^*, |lambda1| >= |lambda2|.
struct EigPair {
  double lambda1 = 0.0;
  double lambda2 = 0.0;

  double max_abs() const { return std::abs(lambda1); }
};

namespace detail {

struct RankTwoInvariants {
  double sum = 0.0;      // ||x||^2 - ||c||^2
  double product = 0.0;  // |x^* c|^2 - ||x||^2 ||c||^2 <= 0
};

inline RankTwoInvariants rank_two_invariants(const CVec& x, const CVec& c) {
  require_same_size(x.size(), c.size(), "nonzero_eigs");
  const double nx = x.squaredNorm();
  const double nc = c.squaredNorm();
  // Product as -||x||^2 ||c_perp||^2 with c_perp the part of c orthogonal to
  // x; forming |x^* c|^2 - ||x||^2 ||c||^2 directly cancels catastrophically
  // when c is nearly parallel to x.
  double perp = nc;
  if (nx > 0.0) perp = (c - (x.dot(c) / nx) * x).squaredNorm();
  return {nx - nc, -nx * perp};
}

}  // namespace detail

inline EigPair nonzero_eigs(const CVec& x, const CVec& c) {
  const auto inv = detail::rank_two_invariants(x, c);
  if (x.squaredNorm() == 0.0 && c.squaredNorm() == 0.0) throw DegenerateError("nonzero_eigs: x and c are both zero");
  const double s = inv.sum;
  const double disc = std::sqrt(s * s - 4.0 * inv.product);
  const double r1 = 0.5 * (s >= 0.0 ? s + disc : s - disc);
  if (r1 == 0.0) return {0.0, 0.0};
  return {r1, inv.product / r1};
}

/// E[d_A] = 8m (lambda1^2 + lambda2^2 + lambda1 lambda2) for rows with
/// i.i.d. N(0,1) + iN(0,1) entries. Uses lambda1^2 + lambda2^2 + lambda1
/// lambda2 = sum^2 - product, which also covers x = c = 0.
inline double expected_d(Eigen::Index m, const CVec& x, const CVec& c) {
  const auto inv = detail::rank_two_invariants(x, c);
  return 8.0 * static_cast<double>(m) * (inv.sum * inv.sum - inv.product);
}

/// E[grad d_A(z)] = m (16 ||z||^2 z - 8 (x^* z) x - 8 ||x||^2 z) under the
/// same ensemble. For unit x and z this is 8m (zz^* - xx^*) z.
inline CVec expected_grad(Eigen::Index m, const CVec& x, const CVec& z) {
  require_same_size(x.size(), z.size(), "expected_grad");
  const double md = static_cast<double>(m);
  return md * (16.0 * z.squaredNorm() * z - 8.0 * x.dot(z) * x - 8.0 * x.squaredNorm() * z);
}

}  // namespace coper
