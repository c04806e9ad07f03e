// Copyright 2026 The coper Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "coper/core.hpp"
#include "coper/dct.hpp"
#include "coper/random.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <cstdlib>
#include <functional>
#include <memory>
#include <numbers>
#include <string>
#include <vector>

namespace coper {

/// A linear measurement map A : C^n -> C^m. Row k of A is a_k^*.
/// Implementations are immutable after construction and every member is
/// safe to call concurrently.
class MeasurementEnsemble {
 public:
  using RowMap = std::function<Complex(Eigen::Index row, Complex value)>;

  virtual ~MeasurementEnsemble() = default;

  virtual Eigen::Index rows() const = 0;
  virtual Eigen::Index cols() const = 0;

  /// Ax.
  virtual CVec apply(const CVec& x) const = 0;
  /// A^* v.
  virtual CVec adjoint_apply(const CVec& v) const = 0;

  /// A^* w where w_k = f(k, (Az)_k). Streaming ensembles override this to
  /// visit each row once.
  virtual CVec weighted_adjoint(const CVec& z, const RowMap& f) const {
    CVec u = apply(z);
    for (Eigen::Index k = 0; k < u.size(); ++k) u[k] = f(k, u[k]);
    return adjoint_apply(u);
  }

  /// Average squared entry magnitude, ||A||_F^2 / (mn), taken in
  /// expectation over the sampling distribution for random ensembles.
  virtual double entry_energy() const = 0;

  virtual std::string describe() const = 0;

 protected:
  void check_input(const CVec& x) const { require_same_size(x.size(), cols(), "apply"); }
  void check_output(const CVec& v) const { require_same_size(v.size(), rows(), "adjoint_apply"); }
};

inline CVec apply(const MeasurementEnsemble& e, const CVec& x) { return e.apply(x); }

inline CVec adjoint_apply(const MeasurementEnsemble& e, const CVec& v) { return e.adjoint_apply(v); }

/// y = |Ax|.
inline PhaselessObservations magnitudes(const MeasurementEnsemble& e, const CVec& x) {
  return PhaselessObservations(e.apply(x).cwiseAbs());
}

/// Explicit matrix. Used for hand-built instances and as a test oracle.
class DenseEnsemble final : public MeasurementEnsemble {
 public:
  explicit DenseEnsemble(Eigen::MatrixXcd a) : a_(std::move(a)) {
    if (a_.rows() == 0 || a_.cols() == 0) throw ArgumentError("DenseEnsemble: empty matrix");
  }

  Eigen::Index rows() const override { return a_.rows(); }
  Eigen::Index cols() const override { return a_.cols(); }
  CVec apply(const CVec& x) const override {
    check_input(x);
    return a_ * x;
  }
  CVec adjoint_apply(const CVec& v) const override {
    check_output(v);
    return a_.adjoint() * v;
  }
  double entry_energy() const override {
    return a_.squaredNorm() / static_cast<double>(a_.rows() * a_.cols());
  }
  std::string describe() const override {
    return "dense(" + std::to_string(a_.rows()) + "x" + std::to_string(a_.cols()) + ")";
  }
  const Eigen::MatrixXcd& matrix() const noexcept { return a_; }

 private:
  Eigen::MatrixXcd a_;
};

namespace detail {

inline std::size_t default_cache_bytes() {
  if (const char* env = std::getenv("COPER_CACHE_MB")) {
    return static_cast<std::size_t>(std::strtoull(env, nullptr, 10)) << 20U;
  }
  return std::size_t{2048} << 20U;
}

}  // namespace detail

/// i.i.d. N(0,1) + i N(0,1) entries.
///
/// Row k is drawn from the SplitMix64 stream derive_seed(seed, {k}); its
/// entries are produced in column order, real part first, each rounded to
/// single precision. Rows that fit in the cache budget are stored; the rest
/// are regenerated on every sweep, giving identical values either way.
class GaussianEnsemble final : public MeasurementEnsemble {
 public:
  GaussianEnsemble(Eigen::Index m, Eigen::Index n, std::uint64_t seed,
                   std::size_t cache_bytes = detail::default_cache_bytes())
      : m_(m), n_(n), seed_(seed) {
    if (m <= 0 || n <= 0) throw ArgumentError("sample_gaussian: dimensions must be >= 1");
    const std::size_t row_bytes = sizeof(std::complex<float>) * static_cast<std::size_t>(n);
    cached_rows_ = std::min<Eigen::Index>(m, static_cast<Eigen::Index>(cache_bytes / row_bytes));
    cache_.resize(static_cast<std::size_t>(cached_rows_ * n));
    for (Eigen::Index k = 0; k < cached_rows_; ++k) generate_row(k, cache_.data() + k * n);
  }

  Eigen::Index rows() const override { return m_; }
  Eigen::Index cols() const override { return n_; }
  std::uint64_t seed() const noexcept { return seed_; }
  Eigen::Index cached_rows() const noexcept { return cached_rows_; }

  void generate_row(Eigen::Index k, std::complex<float>* dst) const {
    NormalStream gauss(derive_seed(seed_, {static_cast<std::uint64_t>(k)}));
    for (Eigen::Index j = 0; j < n_; ++j) {
      const auto re = static_cast<float>(gauss());
      const auto im = static_cast<float>(gauss());
      dst[j] = {re, im};
    }
  }

  Complex entry(Eigen::Index k, Eigen::Index j) const {
    std::vector<std::complex<float>> row(static_cast<std::size_t>(n_));
    generate_row(k, row.data());
    return Complex(row[static_cast<std::size_t>(j)]);
  }

  Eigen::MatrixXcd materialize() const {
    Eigen::MatrixXcd a(m_, n_);
    std::vector<std::complex<float>> row(static_cast<std::size_t>(n_));
    for (Eigen::Index k = 0; k < m_; ++k) {
      generate_row(k, row.data());
      for (Eigen::Index j = 0; j < n_; ++j) a(k, j) = Complex(row[static_cast<std::size_t>(j)]);
    }
    return a;
  }

  CVec apply(const CVec& x) const override {
    check_input(x);
    CVec out(m_);
    for_each_row([&](Eigen::Index k, const std::complex<float>* row) { out[k] = row_dot(row, x); });
    return out;
  }

  CVec adjoint_apply(const CVec& v) const override {
    check_output(v);
    Accumulator acc(n_, wide_sums());
    for_each_row([&](Eigen::Index k, const std::complex<float>* row) { acc.add(row, v[k]); });
    return acc.result();
  }

  CVec weighted_adjoint(const CVec& z, const RowMap& f) const override {
    check_input(z);
    Accumulator acc(n_, wide_sums());
    for_each_row([&](Eigen::Index k, const std::complex<float>* row) {
      acc.add(row, f(k, row_dot(row, z)));
    });
    return acc.result();
  }

  double entry_energy() const override { return 2.0; }

  std::string describe() const override {
    return "gaussian(m=" + std::to_string(m_) + ",n=" + std::to_string(n_) +
           ",seed=" + std::to_string(seed_) + ")";
  }

 private:
  template <typename Fn>
  void for_each_row(Fn&& fn) const {
    for (Eigen::Index k = 0; k < cached_rows_; ++k) fn(k, cache_.data() + k * n_);
    if (cached_rows_ == m_) return;
    std::vector<std::complex<float>> scratch(static_cast<std::size_t>(n_));
    for (Eigen::Index k = cached_rows_; k < m_; ++k) {
      generate_row(k, scratch.data());
      fn(k, scratch.data());
    }
  }

  // Four interleaved partial sums, combined in a fixed order.
  Complex row_dot(const std::complex<float>* row, const CVec& x) const {
    double sr[4] = {0, 0, 0, 0}, si[4] = {0, 0, 0, 0};
    const Complex* xp = x.data();
    Eigen::Index j = 0;
    for (; j + 4 <= n_; j += 4) {
      for (int l = 0; l < 4; ++l) {
        const double ar = row[j + l].real(), ai = row[j + l].imag();
        const double xr = xp[j + l].real(), xi = xp[j + l].imag();
        sr[l] += ar * xr - ai * xi;
        si[l] += ar * xi + ai * xr;
      }
    }
    for (; j < n_; ++j) {
      const double ar = row[j].real(), ai = row[j].imag();
      sr[0] += ar * xp[j].real() - ai * xp[j].imag();
      si[0] += ar * xp[j].imag() + ai * xp[j].real();
    }
    return {(sr[0] + sr[1]) + (sr[2] + sr[3]), (si[0] + si[1]) + (si[2] + si[3])};
  }

  // Sums conj(a_kj) v_k over rows k in ascending order, in long double
  // once m reaches 1e5.
  class Accumulator {
   public:
    Accumulator(Eigen::Index n, bool wide) : n_(n), wide_(wide) {
      if (wide_) {
        wre_.assign(static_cast<std::size_t>(n), 0.0L);
        wim_.assign(static_cast<std::size_t>(n), 0.0L);
      } else {
        re_.assign(static_cast<std::size_t>(n), 0.0);
        im_.assign(static_cast<std::size_t>(n), 0.0);
      }
    }
    void add(const std::complex<float>* row, Complex v) {
      const double vr = v.real(), vi = v.imag();
      if (wide_) {
        for (Eigen::Index j = 0; j < n_; ++j) {
          const double ar = row[j].real(), ai = row[j].imag();
          wre_[j] += static_cast<long double>(ar * vr + ai * vi);
          wim_[j] += static_cast<long double>(ar * vi - ai * vr);
        }
        return;
      }
      double* re = re_.data();
      double* im = im_.data();
      for (Eigen::Index j = 0; j < n_; ++j) {
        const double ar = row[j].real(), ai = row[j].imag();
        re[j] += ar * vr + ai * vi;
        im[j] += ar * vi - ai * vr;
      }
    }
    CVec result() const {
      CVec out(n_);
      for (Eigen::Index j = 0; j < n_; ++j) {
        out[j] = wide_ ? Complex(static_cast<double>(wre_[j]), static_cast<double>(wim_[j]))
                       : Complex(re_[j], im_[j]);
      }
      return out;
    }

   private:
    Eigen::Index n_;
    bool wide_;
    std::vector<double> re_, im_;
    std::vector<long double> wre_, wim_;
  };

  bool wide_sums() const noexcept { return m_ >= 100000; }

  Eigen::Index m_, n_;
  std::uint64_t seed_;
  Eigen::Index cached_rows_ = 0;
  std::vector<std::complex<float>> cache_;
};

inline GaussianEnsemble sample_gaussian(Eigen::Index m, Eigen::Index n, std::uint64_t seed) {
  return GaussianEnsemble(m, n, seed);
}

/// How the coded-diffraction cosine sums are evaluated.
enum class CosinePath { Auto, Direct, Fast };

/// Real coded diffraction patterns: measurement (l, i), stored at index
/// l*n + i, equals sum_k x_k cos(pi i (k + 1/2) / n) M_{l,k} with i, k in
/// [0, n). Masks take +1, -1, 0 with probabilities 1/4, 1/4, 1/2.
///
/// Mask l is drawn from the stream derive_seed(seed, {l}); entry k uses the
/// top two bits of the k-th 64-bit output (00 -> +1, 01 -> -1, else 0).
class CodedDiffractionEnsemble final : public MeasurementEnsemble {
 public:
  static constexpr Eigen::Index kDirectLimit = 4096;

  CodedDiffractionEnsemble(Eigen::Index n, Eigen::Index masks, std::uint64_t seed,
                           CosinePath path = CosinePath::Auto)
      : n_(n), l_(masks), seed_(seed) {
    if (n <= 0 || masks <= 0) throw ArgumentError("sample_coded_diffraction: dimensions must be >= 1");
    masks_.resize(static_cast<std::size_t>(n * masks));
    for (Eigen::Index l = 0; l < masks; ++l) {
      SplitMix64 engine(derive_seed(seed, {static_cast<std::uint64_t>(l)}));
      for (Eigen::Index k = 0; k < n; ++k) {
        const auto bits = engine() >> 62U;
        masks_[static_cast<std::size_t>(l * n + k)] = bits == 0 ? 1 : (bits == 1 ? -1 : 0);
      }
    }
    init_kernel(path);
  }

  /// Explicit masks, one row per pattern.
  CodedDiffractionEnsemble(const Eigen::MatrixXi& masks, CosinePath path = CosinePath::Auto)
      : n_(masks.cols()), l_(masks.rows()), seed_(0) {
    if (n_ <= 0 || l_ <= 0) throw ArgumentError("CodedDiffractionEnsemble: empty mask matrix");
    masks_.resize(static_cast<std::size_t>(n_ * l_));
    for (Eigen::Index l = 0; l < l_; ++l) {
      for (Eigen::Index k = 0; k < n_; ++k) {
        const int v = masks(l, k);
        if (v < -1 || v > 1) throw ArgumentError("CodedDiffractionEnsemble: mask entries must be in {-1,0,1}");
        masks_[static_cast<std::size_t>(l * n_ + k)] = static_cast<std::int8_t>(v);
      }
    }
    init_kernel(path);
  }

  Eigen::Index rows() const override { return n_ * l_; }
  Eigen::Index cols() const override { return n_; }
  Eigen::Index mask_count() const noexcept { return l_; }
  bool uses_fast_path() const noexcept { return fast_ != nullptr; }

  int mask(Eigen::Index l, Eigen::Index k) const { return masks_[static_cast<std::size_t>(l * n_ + k)]; }

  /// cos(pi i (k + 1/2) / n) evaluated directly.
  double kernel(Eigen::Index i, Eigen::Index k) const {
    return std::cos(std::numbers::pi * static_cast<double>(i) * (static_cast<double>(k) + 0.5) /
                    static_cast<double>(n_));
  }

  Eigen::MatrixXcd materialize() const {
    Eigen::MatrixXcd a(rows(), n_);
    for (Eigen::Index l = 0; l < l_; ++l)
      for (Eigen::Index i = 0; i < n_; ++i)
        for (Eigen::Index k = 0; k < n_; ++k) a(l * n_ + i, k) = kernel(i, k) * mask(l, k);
    return a;
  }

  CVec apply(const CVec& x) const override {
    check_input(x);
    CVec out(rows());
    std::vector<double> ur(static_cast<std::size_t>(n_)), ui(static_cast<std::size_t>(n_));
    std::vector<double> yr(static_cast<std::size_t>(n_)), yi(static_cast<std::size_t>(n_));
    for (Eigen::Index l = 0; l < l_; ++l) {
      for (Eigen::Index k = 0; k < n_; ++k) {
        const double mk = mask(l, k);
        ur[k] = mk * x[k].real();
        ui[k] = mk * x[k].imag();
      }
      cosine_forward(ur.data(), yr.data());
      cosine_forward(ui.data(), yi.data());
      for (Eigen::Index i = 0; i < n_; ++i) out[l * n_ + i] = Complex(yr[i], yi[i]);
    }
    return out;
  }

  CVec adjoint_apply(const CVec& v) const override {
    check_output(v);
    CVec out = CVec::Zero(n_);
    std::vector<double> vr(static_cast<std::size_t>(n_)), vi(static_cast<std::size_t>(n_));
    std::vector<double> tr(static_cast<std::size_t>(n_)), ti(static_cast<std::size_t>(n_));
    for (Eigen::Index l = 0; l < l_; ++l) {
      for (Eigen::Index i = 0; i < n_; ++i) {
        vr[i] = v[l * n_ + i].real();
        vi[i] = v[l * n_ + i].imag();
      }
      cosine_transpose(vr.data(), tr.data());
      cosine_transpose(vi.data(), ti.data());
      for (Eigen::Index k = 0; k < n_; ++k) out[k] += static_cast<double>(mask(l, k)) * Complex(tr[k], ti[k]);
    }
    return out;
  }

  /// Exact ||A||_F^2 / (mn): each column k of pattern l contributes
  /// M_{l,k}^2 (n + 1) / 2 since sum_i cos^2(pi i (k+1/2)/n) = (n + 1) / 2.
  double entry_energy() const override {
    double nnz = 0.0;
    for (auto v : masks_) nnz += v != 0 ? 1.0 : 0.0;
    const double nd = static_cast<double>(n_);
    return nnz * (nd + 1.0) / 2.0 / (static_cast<double>(rows()) * nd);
  }

  std::string describe() const override {
    return "cdp(n=" + std::to_string(n_) + ",L=" + std::to_string(l_) + ",seed=" + std::to_string(seed_) + ")";
  }

 private:
  void init_kernel(CosinePath path) {
    const bool fast = path == CosinePath::Fast || (path == CosinePath::Auto && n_ > kDirectLimit);
    if (fast) {
      fast_ = std::make_shared<dct::Dct1d>(static_cast<std::size_t>(n_));
      return;
    }
    // cos(pi t / (2n)) for t in [0, 4n); the kernel argument is i(2k+1) mod 4n.
    table_.resize(static_cast<std::size_t>(4 * n_));
    for (Eigen::Index t = 0; t < 4 * n_; ++t) {
      table_[static_cast<std::size_t>(t)] =
          std::cos(std::numbers::pi * static_cast<double>(t) / (2.0 * static_cast<double>(n_)));
    }
  }

  void cosine_forward(const double* u, double* y) const {
    if (fast_) {
      dct::Buffer in = dct::make_buffer(n_), out = dct::make_buffer(n_);
      std::copy(u, u + n_, in.get());
      fast_->forward(in.get(), out.get());
      std::copy(out.get(), out.get() + n_, y);
      return;
    }
    const std::int64_t period = 4 * n_;
    for (Eigen::Index i = 0; i < n_; ++i) {
      double s = 0.0;
      std::int64_t t = i;  // i (2k + 1) mod 4n, stepping k
      const std::int64_t step = (2 * i) % period;
      for (Eigen::Index k = 0; k < n_; ++k) {
        s += u[k] * table_[static_cast<std::size_t>(t)];
        t += step;
        if (t >= period) t -= period;
      }
      y[i] = s;
    }
  }

  void cosine_transpose(const double* v, double* x) const {
    if (fast_) {
      dct::Buffer in = dct::make_buffer(n_), out = dct::make_buffer(n_);
      std::copy(v, v + n_, in.get());
      fast_->transpose(in.get(), out.get());
      std::copy(out.get(), out.get() + n_, x);
      return;
    }
    const std::int64_t period = 4 * n_;
    for (Eigen::Index k = 0; k < n_; ++k) {
      double s = 0.0;
      std::int64_t t = 0;  // i (2k + 1) mod 4n, stepping i
      const std::int64_t step = (2 * k + 1) % period;
      for (Eigen::Index i = 0; i < n_; ++i) {
        s += v[i] * table_[static_cast<std::size_t>(t)];
        t += step;
        if (t >= period) t -= period;
      }
      x[k] = s;
    }
  }

  Eigen::Index n_, l_;
  std::uint64_t seed_;
  std::vector<std::int8_t> masks_;
  std::vector<double> table_;
  std::shared_ptr<dct::Dct1d> fast_;
};

inline CodedDiffractionEnsemble sample_coded_diffraction(Eigen::Index n, Eigen::Index masks,
                                                         std::uint64_t seed) {
  return CodedDiffractionEnsemble(n, masks, seed);
}

}  // namespace coper
