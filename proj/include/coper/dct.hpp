// Copyright 2026 The coper Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

// Thin RAII layer over FFTW's real-to-real DCT kernels.
//
// Plans are created with FFTW_ESTIMATE so the chosen algorithm (and hence
// the floating-point result) does not depend on timing measurements.
// Planning is serialized through a process-wide mutex; execution uses the
// new-array interface on fftw_malloc'd buffers and is thread-safe.

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <memory>
#include <mutex>
#include <new>
#include <span>

namespace coper::dct {

inline std::mutex& planner_mutex() {
  static std::mutex m;
  return m;
}

struct PlanDeleter {
  void operator()(fftw_plan_s* p) const noexcept {
    if (p != nullptr) {
      std::lock_guard lock(planner_mutex());
      fftw_destroy_plan(p);
    }
  }
};
using Plan = std::unique_ptr<fftw_plan_s, PlanDeleter>;

struct BufferDeleter {
  void operator()(double* p) const noexcept { fftw_free(p); }
};
using Buffer = std::unique_ptr<double[], BufferDeleter>;

inline Buffer make_buffer(std::size_t n) {
  auto* p = static_cast<double*>(fftw_malloc(sizeof(double) * (n == 0 ? 1 : n)));
  if (p == nullptr) throw std::bad_alloc();
  return Buffer(p);
}

/// Unnormalized 1-D DCT-II and its transpose, matching the kernel
///   (C u)_i = sum_k u_k cos(pi i (k + 1/2) / n),  i, k in [0, n).
class Dct1d {
 public:
  explicit Dct1d(std::size_t n) : n_(n) {
    Buffer in = make_buffer(n), out = make_buffer(n);
    std::lock_guard lock(planner_mutex());
    const int len = static_cast<int>(n);
    forward_.reset(fftw_plan_r2r_1d(len, in.get(), out.get(), FFTW_REDFT10, FFTW_ESTIMATE));
    transpose_.reset(fftw_plan_r2r_1d(len, in.get(), out.get(), FFTW_REDFT01, FFTW_ESTIMATE));
  }

  std::size_t size() const noexcept { return n_; }

  /// out = C in. `in` and `out` must be fftw_malloc'd and distinct.
  void forward(double* in, double* out) const {
    fftw_execute_r2r(forward_.get(), in, out);  // 2 * sum_k in_k cos(...)
    for (std::size_t i = 0; i < n_; ++i) out[i] *= 0.5;
  }

  /// out = C^T in.
  void transpose(double* in, double* out) const {
    const double first = in[0];
    fftw_execute_r2r(transpose_.get(), in, out);  // in_0 + 2 sum_{i>0} in_i cos(...)
    for (std::size_t k = 0; k < n_; ++k) out[k] = 0.5 * (out[k] + first);
  }

 private:
  std::size_t n_;
  Plan forward_;
  Plan transpose_;
};

/// Orthonormal 2-D DCT-II over a row-major rows x cols grid.
class Dct2d {
 public:
  Dct2d(std::size_t rows, std::size_t cols) : rows_(rows), cols_(cols) {
    const std::size_t n = rows * cols;
    Buffer in = make_buffer(n), out = make_buffer(n);
    std::lock_guard lock(planner_mutex());
    const int r = static_cast<int>(rows), c = static_cast<int>(cols);
    forward_.reset(fftw_plan_r2r_2d(r, c, in.get(), out.get(), FFTW_REDFT10, FFTW_REDFT10,
                                    FFTW_ESTIMATE));
    inverse_.reset(fftw_plan_r2r_2d(r, c, in.get(), out.get(), FFTW_REDFT01, FFTW_REDFT01,
                                    FFTW_ESTIMATE));
  }

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  std::size_t size() const noexcept { return rows_ * cols_; }

  void forward(std::span<const double> pixels, std::span<double> coeffs) const {
    Buffer in = make_buffer(size()), out = make_buffer(size());
    std::copy(pixels.begin(), pixels.end(), in.get());
    fftw_execute_r2r(forward_.get(), in.get(), out.get());
    for (std::size_t i = 0; i < rows_; ++i) {
      for (std::size_t j = 0; j < cols_; ++j) {
        coeffs[i * cols_ + j] = out[i * cols_ + j] * 0.25 * scale(i, rows_) * scale(j, cols_);
      }
    }
  }

  void inverse(std::span<const double> coeffs, std::span<double> pixels) const {
    Buffer in = make_buffer(size()), out = make_buffer(size());
    for (std::size_t i = 0; i < rows_; ++i) {
      for (std::size_t j = 0; j < cols_; ++j) {
        const double wi = i == 0 ? 1.0 : 0.5;
        const double wj = j == 0 ? 1.0 : 0.5;
        in[i * cols_ + j] = coeffs[i * cols_ + j] * scale(i, rows_) * scale(j, cols_) * wi * wj;
      }
    }
    fftw_execute_r2r(inverse_.get(), in.get(), out.get());
    std::copy(out.get(), out.get() + size(), pixels.begin());
  }

 private:
  static double scale(std::size_t k, std::size_t n) {
    return k == 0 ? std::sqrt(1.0 / static_cast<double>(n)) : std::sqrt(2.0 / static_cast<double>(n));
  }

  std::size_t rows_, cols_;
  Plan forward_;
  Plan inverse_;
};

}  // namespace coper::dct
