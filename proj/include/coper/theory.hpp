// Copyright 2026 The coper Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

// Monte Carlo checks of the closed-form identities and probability bounds
// behind COPER and GD-COPER. Every check is deterministic under its seed:
// trial t at grid point p draws from derive_seed(seed, {p, t}).

#include "coper/compression.hpp"
#include "coper/core.hpp"
#include "coper/measurement.hpp"
#include "coper/objective.hpp"
#include "coper/random.hpp"
#include "coper/signal.hpp"
#include "coper/solvers.hpp"

#include <boost/math/special_functions/erf.hpp>

#include <cmath>
#include <functional>
#include <iomanip>
#include <limits>
#include <numbers>
#include <ostream>
#include <string>
#include <utility>
#include <vector>

namespace coper {

struct TailRow {
  std::vector<double> params;
  double empirical = 0.0;
  double reference = 0.0;  // analytic bound, expected value, or previous grid value
  double stderr_ = 0.0;
  std::size_t trials = 0;
  bool pass = true;
};

/// One row per grid point. A row fails when the empirical value misses its
/// reference by more than the check's allowance in standard errors.
struct TailCheckReport {
  std::string name;
  std::vector<std::string> param_names;
  std::vector<TailRow> rows;

  std::size_t violations() const {
    std::size_t v = 0;
    for (const auto& r : rows) v += r.pass ? 0 : 1;
    return v;
  }
  bool passed() const { return violations() == 0; }

  void write_csv(std::ostream& os, bool header = true) const {
    if (header) {
      os << "check";
      for (const auto& p : param_names) os << ',' << p;
      os << ",empirical,reference,stderr,trials,pass\n";
    }
    const auto flags = os.flags();
    const auto prec = os.precision();
    os << std::setprecision(10);
    for (const auto& r : rows) {
      os << name;
      for (double p : r.params) os << ',' << p;
      os << ',' << r.empirical << ',' << r.reference << ',' << r.stderr_ << ',' << r.trials << ','
         << (r.pass ? "pass" : "FAIL") << '\n';
    }
    os.flags(flags);
    os.precision(prec);
  }
};

namespace detail {

inline double binomial_se(double p, std::size_t trials) {
  const double q = std::clamp(p, 0.0, 1.0);
  return std::sqrt(q * (1.0 - q) / static_cast<double>(trials));
}

/// Empirical frequency must not exceed `bound` by more than 3 binomial
/// standard errors evaluated at the bound.
inline TailRow upper_bound_row(std::vector<double> params, std::size_t hits, std::size_t trials, double bound) {
  TailRow r;
  r.params = std::move(params);
  r.trials = trials;
  r.empirical = static_cast<double>(hits) / static_cast<double>(trials);
  r.reference = bound;
  r.stderr_ = binomial_se(bound, trials);
  r.pass = bound >= 1.0 || r.empirical <= bound + 3.0 * r.stderr_;
  return r;
}

struct MeanAccumulator {
  long double sum = 0.0L, sumsq = 0.0L;
  std::size_t n = 0;
  void add(double v) {
    sum += v;
    sumsq += static_cast<long double>(v) * v;
    ++n;
  }
  double mean() const { return static_cast<double>(sum / static_cast<long double>(n)); }
  double stderr_() const {
    const long double mu = sum / static_cast<long double>(n);
    const long double var = (sumsq - static_cast<long double>(n) * mu * mu) / static_cast<long double>(n - 1);
    return std::sqrt(std::max(0.0, static_cast<double>(var)) / static_cast<double>(n));
  }
};

inline TailRow two_sided_row(std::vector<double> params, const MeanAccumulator& acc, double expected, double k) {
  TailRow r;
  r.params = std::move(params);
  r.trials = acc.n;
  r.empirical = acc.mean();
  r.reference = expected;
  r.stderr_ = acc.stderr_();
  r.pass = std::abs(r.empirical - expected) <= k * r.stderr_ + 1e-12 * std::abs(expected);
  return r;
}

inline double chi_square_sample(NormalStream& rng, int dof) {
  double s = 0.0;
  for (int i = 0; i < dof; ++i) {
    const double g = rng();
    s += g * g;
  }
  return s;
}

}  // namespace detail

/// P(chi^2(m) > m(1 + tau)) <= exp(-(m/2)(tau - ln(1 + tau))).
inline double chi_square_tail_bound(double m, double tau) { return std::exp(-0.5 * m * (tau - std::log1p(tau))); }

inline TailCheckReport check_chi_square_tail(const std::vector<std::pair<int, double>>& grid, std::size_t trials,
                                             std::uint64_t seed) {
  TailCheckReport rep{"chi_square_tail", {"m", "tau"}, {}};
  for (std::size_t p = 0; p < grid.size(); ++p) {
    const auto [m, tau] = grid[p];
    if (m < 1 || !(tau > 0.0)) throw ArgumentError("check_chi_square_tail: need m >= 1 and tau > 0");
    const double level = m * (1.0 + tau);
    std::size_t hits = 0;
    for (std::size_t t = 0; t < trials; ++t) {
      NormalStream rng(derive_seed(seed, {p, t}));
      hits += detail::chi_square_sample(rng, m) > level ? 1 : 0;
    }
    rep.rows.push_back(detail::upper_bound_row({double(m), tau}, hits, trials, chi_square_tail_bound(m, tau)));
  }
  return rep;
}

inline TailCheckReport check_chi_square_tail(int m, double tau, std::size_t trials, std::uint64_t seed) {
  return check_chi_square_tail({{m, tau}}, trials, seed);
}

/// ln(2 pi e).
inline const double kConcentrationK = std::log(2.0 * std::numbers::pi * std::numbers::e);

/// P(d_A <= lambda_max^2 tau1) <= exp((m/2)(K + ln tau1 - ln m)).
inline double d_lower_tail_bound(double m, double tau1) {
  return std::exp(0.5 * m * (kConcentrationK + std::log(tau1) - std::log(m)));
}

/// P(d_A >= lambda_max^2 (4m(1 + tau2))^2) <= exp(-2m(tau2 - ln(1 + tau2))).
inline double d_upper_tail_bound(double m, double tau2) { return std::exp(-2.0 * m * (tau2 - std::log1p(tau2))); }

/// Both one-sided tails of d_A(|Ax|, |Ac|) over fresh Gaussian ensembles.
/// Grid entries are (m, tau1, tau2); each yields a lower-tail row followed
/// by an upper-tail row (the `tail` parameter is -1 or +1).
inline TailCheckReport check_d_concentration(const CVec& x, const CVec& c,
                                             const std::vector<std::tuple<int, double, double>>& grid,
                                             std::size_t trials, std::uint64_t seed) {
  const EigPair eig = nonzero_eigs(x, c);
  const double lmax2 = eig.lambda1 * eig.lambda1;
  if (lmax2 == 0.0) throw DegenerateError("check_d_concentration: x and c agree up to phase");
  TailCheckReport rep{"d_concentration", {"m", "tau1", "tau2", "tail"}, {}};
  for (std::size_t p = 0; p < grid.size(); ++p) {
    const auto [m, tau1, tau2] = grid[p];
    if (m < 1 || !(tau1 > 0.0) || !(tau2 > 0.0)) throw ArgumentError("check_d_concentration: bad grid point");
    const double lo = lmax2 * tau1;
    const double hi = lmax2 * std::pow(4.0 * m * (1.0 + tau2), 2);
    std::size_t below = 0, above = 0;
    for (std::size_t t = 0; t < trials; ++t) {
      const GaussianEnsemble a(m, x.size(), derive_seed(seed, {p, t}));
      const double d = d_A(a, a.apply(x).cwiseAbs(), c);
      below += d <= lo ? 1 : 0;
      above += d >= hi ? 1 : 0;
    }
    rep.rows.push_back(detail::upper_bound_row({double(m), tau1, tau2, -1.0}, below, trials, d_lower_tail_bound(m, tau1)));
    rep.rows.push_back(detail::upper_bound_row({double(m), tau1, tau2, 1.0}, above, trials, d_upper_tail_bound(m, tau2)));
  }
  return rep;
}

inline TailCheckReport check_d_concentration(const CVec& x, const CVec& c, int m, double tau1, double tau2,
                                             std::size_t trials, std::uint64_t seed) {
  return check_d_concentration(x, c, {{m, tau1, tau2}}, trials, seed);
}

/// E[exp(-alpha Z)] <= sqrt(pi / (lambda_max^2 alpha)) for
/// Z = (lambda1 U + lambda2 V)^2 with U, V independent chi^2(2).
inline double mgf_bound(double lambda1, double lambda2, double alpha) {
  const double lmax = std::max(std::abs(lambda1), std::abs(lambda2));
  return std::sqrt(std::numbers::pi / (lmax * lmax * alpha));
}

inline TailCheckReport check_mgf_bound(const std::vector<std::tuple<double, double, double>>& grid,
                                       std::size_t trials, std::uint64_t seed) {
  TailCheckReport rep{"mgf_bound", {"lambda1", "lambda2", "alpha"}, {}};
  for (std::size_t p = 0; p < grid.size(); ++p) {
    const auto [l1, l2, alpha] = grid[p];
    if (l1 == 0.0 && l2 == 0.0) throw DegenerateError("check_mgf_bound: both eigenvalues are zero");
    if (!(alpha > 0.0)) throw ArgumentError("check_mgf_bound: alpha must be positive");
    detail::MeanAccumulator acc;
    NormalStream rng(derive_seed(seed, {p}));
    for (std::size_t t = 0; t < trials; ++t) {
      const double u = detail::chi_square_sample(rng, 2);
      const double v = detail::chi_square_sample(rng, 2);
      const double z = (l1 * u + l2 * v) * (l1 * u + l2 * v);
      acc.add(std::exp(-alpha * z));
    }
    TailRow r;
    r.params = {l1, l2, alpha};
    r.trials = trials;
    r.empirical = acc.mean();
    r.reference = mgf_bound(l1, l2, alpha);
    r.stderr_ = acc.stderr_();
    r.pass = r.empirical <= r.reference + 3.0 * r.stderr_;
    rep.rows.push_back(r);
  }
  return rep;
}

inline TailCheckReport check_mgf_bound(double lambda1, double lambda2, double alpha, std::size_t trials,
                                       std::uint64_t seed) {
  return check_mgf_bound({{lambda1, lambda2, alpha}}, trials, seed);
}

/// e^{x^2} erfc(x) for x >= 0 without overflow.
inline double erfcx(double x) {
  if (x < 25.0) return std::exp(x * x) * boost::math::erfc(x);
  // Continued fraction, evaluated bottom-up:
  // erfcx(x) = (1/sqrt(pi)) / (x + (1/2)/(x + 1/(x + (3/2)/(x + ...)))).
  double f = x;
  for (int k = 60; k >= 1; --k) f = x + (0.5 * k) / f;
  return 1.0 / (std::sqrt(std::numbers::pi) * f);
}

/// g(u) = e^{1/u^2} Phi(-sqrt(2)/u) = erfcx(1/u) / 2.
inline double g_function(double u) {
  if (!(u > 0.0)) throw ArgumentError("g_function: u must be positive");
  return 0.5 * erfcx(1.0 / u);
}

/// g(u) <= 1 + 1e-12 on `points` log-spaced u in [1e-3, 1e3]; failing
/// points become rows.
inline TailCheckReport g_function_report(std::size_t points = 10000) {
  TailCheckReport rep{"g_function", {"u"}, {}};
  double worst = 0.0, worst_u = 0.0;
  for (std::size_t i = 0; i < points; ++i) {
    const double u = std::pow(10.0, -3.0 + 6.0 * static_cast<double>(i) / static_cast<double>(points - 1));
    const double g = g_function(u);
    if (g > worst) {
      worst = g;
      worst_u = u;
    }
    if (!(g <= 1.0 + 1e-12)) rep.rows.push_back({{u}, g, 1.0, 0.0, 1, false});
  }
  rep.rows.push_back({{worst_u}, worst, 1.0, 0.0, points, worst <= 1.0 + 1e-12});
  return rep;
}

inline bool check_g_function() { return g_function_report().passed(); }

/// Tail frequency of |Re(v^*(grad d_A(z) - E grad d_A(z)))| beyond
/// m eps inf_theta ||e^{i theta} x - z|| along an increasing m grid. A row
/// passes when its frequency does not exceed the previous row's by more
/// than 3 combined standard errors. A final row tests the statistic's
/// mean against zero (3 standard errors).
inline TailCheckReport check_gradient_concentration(const CVec& x, const CVec& z, const CVec& v,
                                                    const std::vector<int>& m_grid, double eps,
                                                    std::size_t trials, std::uint64_t seed) {
  require_same_size(x.size(), z.size(), "check_gradient_concentration");
  require_same_size(x.size(), v.size(), "check_gradient_concentration");
  if (std::abs(v.norm() - 1.0) > 1e-9) throw ArgumentError("check_gradient_concentration: v must be unit norm");
  const double dist = phase_aligned_distance(x, z);
  if (dist < 1e-12) throw DegenerateError("check_gradient_concentration: z agrees with x up to phase");
  TailCheckReport rep{"gradient_concentration", {"m", "eps"}, {}};
  double prev = 1.0, prev_se = 0.0;
  detail::MeanAccumulator pooled;
  for (std::size_t p = 0; p < m_grid.size(); ++p) {
    const int m = m_grid[p];
    const CVec mean = expected_grad(m, x, z);
    const double level = m * eps * dist;
    std::size_t hits = 0;
    for (std::size_t t = 0; t < trials; ++t) {
      const GaussianEnsemble a(m, x.size(), derive_seed(seed, {p, t}));
      const CVec g = grad_d_A(a, a.apply(x).cwiseAbs(), z);
      const double stat = v.dot(g - mean).real();
      hits += std::abs(stat) > level ? 1 : 0;
      pooled.add(stat / std::sqrt(static_cast<double>(m)));
    }
    TailRow r;
    r.params = {double(m), eps};
    r.trials = trials;
    r.empirical = static_cast<double>(hits) / static_cast<double>(trials);
    r.stderr_ = detail::binomial_se(r.empirical, trials);
    r.reference = prev;
    r.pass = r.empirical <= prev + 3.0 * std::hypot(r.stderr_, prev_se);
    rep.rows.push_back(r);
    prev = r.empirical;
    prev_se = r.stderr_;
  }
  rep.rows.push_back(detail::two_sided_row({0.0, eps}, pooled, 0.0, 3.0));
  return rep;
}

/// Monte Carlo mean of d_A over fresh ensembles against 8m(l1^2 + l2^2 + l1 l2).
inline TailCheckReport check_expected_d(const CVec& x, const CVec& c, int m, std::size_t trials, std::uint64_t seed,
                                        double sigmas = 4.0) {
  detail::MeanAccumulator acc;
  for (std::size_t t = 0; t < trials; ++t) {
    const GaussianEnsemble a(m, x.size(), derive_seed(seed, {t}));
    acc.add(d_A(a, a.apply(x).cwiseAbs(), c));
  }
  TailCheckReport rep{"expected_d", {"m"}, {}};
  rep.rows.push_back(detail::two_sided_row({double(m)}, acc, expected_d(m, x, c), sigmas));
  return rep;
}

/// Coordinatewise Monte Carlo mean of grad d_A(z); one row per real and
/// imaginary part (`part` 0 or 1) of each coordinate.
inline TailCheckReport check_expected_grad(const CVec& x, const CVec& z, int m, std::size_t trials,
                                           std::uint64_t seed, double sigmas = 4.0) {
  const Eigen::Index n = x.size();
  std::vector<detail::MeanAccumulator> acc(static_cast<std::size_t>(2 * n));
  for (std::size_t t = 0; t < trials; ++t) {
    const GaussianEnsemble a(m, n, derive_seed(seed, {t}));
    const CVec g = grad_d_A(a, a.apply(x).cwiseAbs(), z);
    for (Eigen::Index j = 0; j < n; ++j) {
      acc[static_cast<std::size_t>(2 * j)].add(g[j].real());
      acc[static_cast<std::size_t>(2 * j + 1)].add(g[j].imag());
    }
  }
  const CVec expected = expected_grad(m, x, z);
  TailCheckReport rep{"expected_grad", {"m", "coordinate", "part"}, {}};
  for (Eigen::Index j = 0; j < n; ++j) {
    rep.rows.push_back(detail::two_sided_row({double(m), double(j), 0.0}, acc[static_cast<std::size_t>(2 * j)],
                                             expected[j].real(), sigmas));
    rep.rows.push_back(detail::two_sided_row({double(m), double(j), 1.0}, acc[static_cast<std::size_t>(2 * j + 1)],
                                             expected[j].imag(), sigmas));
  }
  return rep;
}

/// C = 32 sqrt(3).
inline const double kCoperConstant = 32.0 * std::sqrt(3.0);

struct CoperGuaranteeResult {
  TailCheckReport report;  // success frequency of dist^2 <= C delta^eps per m
  TailCheckReport exact;   // frequency of returning the codeword nearest x
  double delta = 0.0;
  std::size_t rate = 0;
};

/// COPER on fresh Gaussian ensembles for signals drawn by `sample(key)`.
/// delta is measured on every signal drawn. Rows on the m grid must be
/// non-decreasing within 3 standard errors, and the last must reach 0.9.
inline CoperGuaranteeResult check_coper_guarantee(const CompressionCode& code,
                                                  const std::function<CVec(std::uint64_t)>& sample,
                                                  const std::vector<int>& m_grid, std::size_t trials,
                                                  std::uint64_t seed, double eps = 0.5) {
  const auto rate = code.fixed_rate();
  if (!rate) throw ArgumentError("check_coper_guarantee: code has no fixed rate");
  const std::vector<CVec> book = enumerate_codebook(code);  // throws TooLargeError beyond 20 bits

  std::vector<CVec> signals;
  for (std::size_t p = 0; p < m_grid.size(); ++p) {
    for (std::size_t t = 0; t < trials; ++t) signals.push_back(sample(derive_seed(seed, {p, t, 0})));
  }
  CoperGuaranteeResult out{{"coper_guarantee", {"m", "delta", "eps"}, {}}, {"coper_exact", {"m", "delta"}, {}},
                           measure_distortion(code, signals), *rate};
  const double level = out.delta > 0.0 ? kCoperConstant * std::pow(out.delta, eps) : 0.0;

  double prev = 0.0, prev_se = 0.0, prev_exact = 0.0, prev_exact_se = 0.0;
  for (std::size_t p = 0; p < m_grid.size(); ++p) {
    const int m = m_grid[p];
    std::size_t ok = 0, exact = 0;
    for (std::size_t t = 0; t < trials; ++t) {
      const CVec& x = signals[p * trials + t];
      const GaussianEnsemble a(m, x.size(), derive_seed(seed, {p, t, 1}));
      const CVec xhat = book[coper_exhaustive_index(a, a.apply(x).cwiseAbs(), book)];
      ok += phase_aligned_sq_distance(x, xhat) <= level + 1e-12 ? 1 : 0;  // rounding slack for delta = 0
      exact += phase_aligned_sq_distance(project(code, x), xhat) <= 1e-12 ? 1 : 0;
    }
    auto row = [&](std::size_t hits, double& pv, double& pse, bool last) {
      TailRow r;
      r.params = {double(m), out.delta, eps};
      r.trials = trials;
      r.empirical = static_cast<double>(hits) / static_cast<double>(trials);
      r.stderr_ = detail::binomial_se(r.empirical, trials);
      r.reference = last ? 0.9 : pv;
      r.pass = r.empirical + 3.0 * std::hypot(r.stderr_, pse) >= pv && (!last || r.empirical >= 0.9);
      pv = r.empirical;
      pse = r.stderr_;
      return r;
    };
    const bool last = p + 1 == m_grid.size();
    out.report.rows.push_back(row(ok, prev, prev_se, last));
    TailRow e = row(exact, prev_exact, prev_exact_se, false);
    e.params.pop_back();
    out.exact.rows.push_back(e);
  }
  return out;
}

/// Final phase-aligned error of GD-COPER from inits at distance `init_dist`
/// of unit k-sparse x, against (1/2)(3/4)^T + 12 delta. delta is the code's
/// distortion measured on `delta_samples` draws from the same class.
struct ConvergenceResult {
  TailCheckReport report;  // one row per trial: final error vs bound
  std::size_t successes = 0;
  double delta = 0.0;
  double bound = 0.0;
};

inline ConvergenceResult check_gd_coper_convergence(Eigen::Index n, Eigen::Index k, Eigen::Index m, unsigned bits,
                                                    std::size_t iterations, double init_dist, std::size_t trials,
                                                    std::uint64_t seed, std::size_t delta_samples = 2000) {
  const KSparseQuantizingCode code(n, k, bits, true);
  std::vector<CVec> sample;
  for (std::size_t i = 0; i < delta_samples; ++i) sample.push_back(random_sparse_unit(n, k, derive_seed(seed, {1, i})));
  ConvergenceResult out;
  out.delta = measure_distortion(code, sample);
  out.bound = 0.5 * std::pow(0.75, static_cast<double>(iterations)) + 12.0 * out.delta;
  out.report = {"gd_coper_convergence", {"trial", "m", "T"}, {}};
  for (std::size_t t = 0; t < trials; ++t) {
    const CVec x = random_sparse_unit(n, k, derive_seed(seed, {2, t}));
    const CVec z0 = perturb_to_distance(x, init_dist, derive_seed(seed, {3, t}));
    const GaussianEnsemble a(m, n, derive_seed(seed, {4, t}));
    SolverConfig cfg;
    cfg.max_iterations = iterations;
    cfg.record_trajectory = false;
    const auto res = gd_coper(a, a.apply(x).cwiseAbs(), code, StepSchedule::theory(m), z0, cfg);
    TailRow r;
    r.params = {double(t), double(m), double(iterations)};
    r.trials = 1;
    r.empirical = phase_aligned_distance(x, res.estimate);
    r.reference = out.bound;
    r.pass = !res.diverged && r.empirical <= out.bound;
    out.successes += r.pass ? 1 : 0;
    out.report.rows.push_back(r);
  }
  return out;
}

/// Per-step contraction with theta_0 frozen from z_0:
/// e_{t+1} <= (e_t + eps) e_t + 3 delta, e_t = ||z_t - e^{i theta_0} x||.
/// A trial holds when every step satisfies it. Rows are per trial; the
/// returned fraction is what gets compared against a target.
struct ContractionResult {
  TailCheckReport report;
  double fraction = 0.0;
  double delta = 0.0;
};

inline ContractionResult check_contraction(Eigen::Index n, Eigen::Index k, Eigen::Index m, unsigned bits,
                                           std::size_t iterations, double init_dist, double eps,
                                           std::size_t trials, std::uint64_t seed,
                                           std::size_t delta_samples = 2000) {
  const KSparseQuantizingCode code(n, k, bits, true);
  std::vector<CVec> sample;
  for (std::size_t i = 0; i < delta_samples; ++i) sample.push_back(random_sparse_unit(n, k, derive_seed(seed, {1, i})));
  ContractionResult out;
  out.delta = measure_distortion(code, sample);
  out.report = {"contraction", {"trial", "m", "eps"}, {}};
  std::size_t held = 0;
  for (std::size_t t = 0; t < trials; ++t) {
    const CVec x = random_sparse_unit(n, k, derive_seed(seed, {2, t}));
    const CVec z0 = perturb_to_distance(x, init_dist, derive_seed(seed, {3, t}));
    const GaussianEnsemble a(m, n, derive_seed(seed, {4, t}));
    const RVec y = a.apply(x).cwiseAbs();
    const CVec xr = align_phase(z0, x);  // e^{i theta_0} x
    CVec z = z0;
    double e = (z - xr).norm();
    double worst_slack = std::numeric_limits<double>::infinity();
    for (std::size_t it = 1; it <= iterations; ++it) {
      const CVec s = z - (1.0 / (8.0 * static_cast<double>(m))) * grad_d_A(a, y, z);
      z = project(code, s);
      const double next = (z - xr).norm();
      worst_slack = std::min(worst_slack, (e + eps) * e + 3.0 * out.delta - next);
      e = next;
    }
    TailRow r;
    r.params = {double(t), double(m), eps};
    r.trials = 1;
    r.empirical = worst_slack;
    r.reference = 0.0;
    r.pass = worst_slack >= 0.0;
    held += r.pass ? 1 : 0;
    out.report.rows.push_back(r);
  }
  out.fraction = static_cast<double>(held) / static_cast<double>(trials);
  return out;
}

}  // namespace coper
