// Copyright 2026 The coper Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

// Named Monte Carlo suites behind `coper validate-theory`, at desk scale.

#include "coper/compression.hpp"
#include "coper/theory.hpp"

#include <functional>
#include <map>
#include <string>
#include <vector>

namespace coper::harness {

struct SuiteOutcome {
  std::vector<TailCheckReport> reports;
  std::vector<std::string> notes;  // one-line facts for the summary

  bool passed() const {
    for (const auto& r : reports) {
      if (!r.passed()) return false;
    }
    return true;
  }
};

namespace detail {

inline CVec unit_complex(Eigen::Index n, std::uint64_t key) { return random_complex(n, key).normalized(); }

inline SuiteOutcome suite_chi_square(std::uint64_t seed) {
  std::vector<std::pair<int, double>> grid;
  for (int m : {2, 4, 8, 16}) {
    for (double tau : {0.5, 1.0, 2.0}) grid.emplace_back(m, tau);
  }
  return {{check_chi_square_tail(grid, 20000, seed)}, {}};
}

inline SuiteOutcome suite_d_concentration(std::uint64_t seed) {
  const CVec x = unit_complex(4, derive_seed(seed, {1}));
  const CVec c = unit_complex(4, derive_seed(seed, {2}));
  std::vector<std::tuple<int, double, double>> grid;
  for (int m : {2, 4, 8}) {
    for (double tau1 : {0.1, 1.0}) grid.emplace_back(m, tau1, 0.5);
  }
  return {{check_d_concentration(x, c, grid, 10000, derive_seed(seed, {3}))}, {}};
}

inline SuiteOutcome suite_mgf(std::uint64_t seed) {
  const std::vector<std::tuple<double, double, double>> grid = {
      {1.0, -1.0, 1.0}, {1.0, -1.0, std::numbers::pi}, {1.0, -1.0, 10.0}, {1.0, -1.0, 100.0},
      {0.8, -0.3, 5.0}, {2.0, -0.5, 50.0}};
  return {{check_mgf_bound(grid, 100000, seed)}, {}};
}

inline SuiteOutcome suite_g_function(std::uint64_t) { return {{g_function_report()}, {}}; }

inline SuiteOutcome suite_gradient(std::uint64_t seed) {
  const CVec x = unit_complex(4, derive_seed(seed, {1}));
  const CVec z = unit_complex(4, derive_seed(seed, {2}));
  const CVec v = unit_complex(4, derive_seed(seed, {3}));
  return {{check_gradient_concentration(x, z, v, {50, 200, 800}, 0.5, 2000, derive_seed(seed, {4}))}, {}};
}

inline SuiteOutcome suite_expectations(std::uint64_t seed) {
  const CVec x = unit_complex(4, derive_seed(seed, {1}));
  const CVec z = unit_complex(4, derive_seed(seed, {2}));
  return {{check_expected_d(x, z, 5, 10000, derive_seed(seed, {3})),
           check_expected_grad(x, z, 5, 10000, derive_seed(seed, {4}))},
          {}};
}

inline SuiteOutcome suite_coper_guarantee(std::uint64_t seed) {
  const KSparseQuantizingCode code(8, 1, 5, true);
  auto sample = [](std::uint64_t key) { return random_sparse_unit(8, 1, key); };
  auto res = check_coper_guarantee(code, sample, {1, 2, 4, 8, 16}, 200, seed);
  SuiteOutcome out{{res.report}, {}};
  out.notes.push_back("rate " + std::to_string(res.rate) + " bits, delta " + std::to_string(res.delta));
  out.notes.push_back("exact-recovery frequency at the largest m: " + std::to_string(res.exact.rows.back().empirical));
  return out;
}

inline SuiteOutcome suite_convergence(std::uint64_t seed) {
  // Individual trials may miss the bound; the suite asks for 18 of 20.
  const auto res = check_gd_coper_convergence(64, 3, 1200, 10, 30, 0.5, 20, seed);
  TailCheckReport summary{"gd_coper_convergence", {"m", "T", "bound"}, {}};
  TailRow r;
  r.params = {1200.0, 30.0, res.bound};
  r.trials = res.report.rows.size();
  r.empirical = static_cast<double>(res.successes);
  r.reference = 18.0;
  r.pass = res.successes >= 18;
  summary.rows.push_back(r);
  return {{summary}, {"successes " + std::to_string(res.successes) + "/20, bound " + std::to_string(res.bound)}};
}

inline const std::map<std::string, std::function<SuiteOutcome(std::uint64_t)>>& suites() {
  static const std::map<std::string, std::function<SuiteOutcome(std::uint64_t)>> table = {
      {"chi-square", suite_chi_square},   {"d-concentration", suite_d_concentration},
      {"mgf", suite_mgf},                 {"g-function", suite_g_function},
      {"gradient", suite_gradient},       {"expectations", suite_expectations},
      {"coper-guarantee", suite_coper_guarantee}, {"convergence", suite_convergence}};
  return table;
}

}  // namespace detail

inline std::vector<std::string> suite_names() {
  std::vector<std::string> names;
  for (const auto& [k, _] : detail::suites()) names.push_back(k);
  return names;
}

/// Runs one named suite, or every suite for "all".
inline SuiteOutcome run_theory_suite(const std::string& name, std::uint64_t seed) {
  const auto& table = detail::suites();
  if (name == "all") {
    SuiteOutcome all;
    for (const auto& [k, fn] : table) {
      auto part = fn(seed);
      all.reports.insert(all.reports.end(), part.reports.begin(), part.reports.end());
      for (auto& n : part.notes) all.notes.push_back(k + ": " + n);
    }
    return all;
  }
  const auto it = table.find(name);
  if (it == table.end()) throw ArgumentError("unknown theory suite '" + name + "'");
  return it->second(seed);
}

}  // namespace coper::harness
