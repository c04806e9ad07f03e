// Copyright 2026 The coper Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <complex>
#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <utility>

namespace coper {

using Complex = std::complex<double>;
using CVec = Eigen::VectorXcd;
using RVec = Eigen::VectorXd;

// Error taxonomy. Everything derives from std::runtime_error or
// std::invalid_argument so callers can catch broadly.
struct DimensionError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};
struct ArgumentError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};
struct EmptyInputError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};
struct DegenerateError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct TooLargeError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct ParseError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

inline void require_same_size(std::ptrdiff_t a, std::ptrdiff_t b, const char* what) {
  if (a != b) {
    throw DimensionError(std::string(what) + ": length mismatch (" + std::to_string(a) + " vs " +
                         std::to_string(b) + ")");
  }
}

/// Length-n complex vector with finite entries. Houses the unknown signal,
/// iterates and codewords alike; real images carry zero imaginary parts.
class ComplexSignal {
 public:
  ComplexSignal() = default;

  explicit ComplexSignal(CVec values) : values_(std::move(values)) {
    for (Eigen::Index i = 0; i < values_.size(); ++i) {
      if (!std::isfinite(values_[i].real()) || !std::isfinite(values_[i].imag())) {
        throw ArgumentError("ComplexSignal: non-finite entry at index " + std::to_string(i));
      }
    }
  }

  static ComplexSignal from_real(const RVec& re) { return ComplexSignal(re.cast<Complex>()); }

  static ComplexSignal zeros(Eigen::Index n) { return ComplexSignal(CVec::Zero(n)); }

  static ComplexSignal basis(Eigen::Index n, Eigen::Index j) {
    CVec v = CVec::Zero(n);
    v[j] = 1.0;
    return ComplexSignal(std::move(v));
  }

  const CVec& values() const noexcept { return values_; }
  operator const CVec&() const noexcept { return values_; }  // NOLINT(google-explicit-constructor)

  Eigen::Index size() const noexcept { return values_.size(); }
  double norm() const { return values_.norm(); }
  Complex operator[](Eigen::Index i) const { return values_[i]; }

  friend bool operator==(const ComplexSignal& a, const ComplexSignal& b) {
    return a.values_.size() == b.values_.size() && a.values_ == b.values_;
  }

 private:
  CVec values_;
};

/// Nonnegative magnitudes y = |Ax|.
class PhaselessObservations {
 public:
  PhaselessObservations() = default;

  explicit PhaselessObservations(RVec magnitudes) : y_(std::move(magnitudes)) {
    for (Eigen::Index i = 0; i < y_.size(); ++i) {
      if (!std::isfinite(y_[i]) || y_[i] < 0.0) {
        throw ArgumentError("PhaselessObservations: entry " + std::to_string(i) +
                            " is negative or non-finite");
      }
    }
  }

  const RVec& values() const noexcept { return y_; }
  operator const RVec&() const noexcept { return y_; }  // NOLINT(google-explicit-constructor)
  Eigen::Index size() const noexcept { return y_.size(); }

 private:
  RVec y_;
};

}  // namespace coper
