// Copyright 2026 The coper Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "coper/core.hpp"
#include "coper/dct.hpp"

#include <algorithm>
#include <bit>
#include <compare>
#include <cmath>
#include <cstdint>
#include <map>
#include <memory>
#include <numeric>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <tuple>
#include <vector>

namespace coper {

/// Bit sequence written and read most-significant-bit first.
class Bitstring {
 public:
  Bitstring() = default;

  void push(std::uint64_t value, unsigned width) {
    for (unsigned b = width; b-- > 0;) bits_.push_back(static_cast<std::uint8_t>((value >> b) & 1U));
  }

  std::uint64_t read(std::size_t pos, unsigned width) const {
    if (pos + width > bits_.size()) throw ParseError("Bitstring: read past end");
    std::uint64_t v = 0;
    for (unsigned b = 0; b < width; ++b) v = (v << 1U) | bits_[pos + b];
    return v;
  }

  std::size_t size() const noexcept { return bits_.size(); }

  std::string to_string() const {
    std::string s(bits_.size(), '0');
    for (std::size_t i = 0; i < bits_.size(); ++i) s[i] = bits_[i] ? '1' : '0';
    return s;
  }

  static Bitstring from_string(const std::string& s) {
    Bitstring b;
    for (char c : s) {
      if (c != '0' && c != '1') throw ParseError("Bitstring: expected only '0' and '1'");
      b.bits_.push_back(c == '1' ? 1 : 0);
    }
    return b;
  }

  /// The `width`-bit encoding of `value`.
  static Bitstring of(std::uint64_t value, unsigned width) {
    Bitstring b;
    b.push(value, width);
    return b;
  }

  friend bool operator==(const Bitstring&, const Bitstring&) = default;
  friend auto operator<=>(const Bitstring&, const Bitstring&) = default;

 private:
  std::vector<std::uint8_t> bits_;
};

/// Encoder/decoder pair (E, D) of a lossy compression code.
///
/// `encode` iterates b -> raw_encode(decode(b)) from the raw encoding until
/// a bitstring repeats, then returns the smallest bitstring on that cycle.
/// A fixed point is a cycle of length one. Re-encoding a decoded codeword
/// re-enters the same cycle and picks the same member, so
/// project(project(s)) == project(s) holds exactly whenever a repeat is
/// found within kMaxRefinements rounds.
class CompressionCode {
 public:
  static constexpr int kMaxRefinements = 32;

  virtual ~CompressionCode() = default;

  virtual Eigen::Index dimension() const = 0;
  virtual CVec decode(const Bitstring& bits) const = 0;

  /// Rate r for fixed-rate codes; variable-rate codes return nullopt.
  virtual std::optional<std::size_t> fixed_rate() const { return std::nullopt; }

  /// Whether the code has a quality knob; codes without one ignore at_quality.
  virtual bool has_quality() const { return false; }
  virtual std::unique_ptr<CompressionCode> at_quality(double /*quality*/) const { return clone(); }

  virtual std::unique_ptr<CompressionCode> clone() const = 0;
  virtual std::string describe() const = 0;

  Bitstring encode(const CVec& s) const {
    require_same_size(s.size(), dimension(), "encode");
    std::vector<Bitstring> seen{raw_encode(s)};
    for (int round = 0; round < kMaxRefinements; ++round) {
      Bitstring next = raw_encode(decode(seen.back()));
      const auto hit = std::find(seen.begin(), seen.end(), next);
      if (hit != seen.end()) return *std::min_element(hit, seen.end());
      seen.push_back(std::move(next));
    }
    return seen.back();
  }

 protected:
  virtual Bitstring raw_encode(const CVec& s) const = 0;
};

/// P_C(s) realized as decode(encode(s)).
inline CVec project(const CompressionCode& code, const CVec& s) { return code.decode(code.encode(s)); }

namespace detail {

/// Exact binomial coefficient; throws when it does not fit in 62 bits.
inline std::uint64_t binomial(std::uint64_t n, std::uint64_t k) {
  if (k > n) return 0;
  k = std::min(k, n - k);
  constexpr std::uint64_t limit = std::uint64_t{1} << 62U;
  std::uint64_t c = 1;
  for (std::uint64_t i = 1; i <= k; ++i) {
    // c (n-k+i) / i is exact; cancel gcd(c, i) first so the product stays small.
    const std::uint64_t g = std::gcd(c, i);
    const std::uint64_t f = (n - k + i) / (i / g);
    c /= g;
    if (c > limit / f) throw TooLargeError("binomial coefficient overflow");
    c *= f;
  }
  return c;
}

inline unsigned bits_for(std::uint64_t count) {
  // Smallest w with 2^w >= count.
  return count <= 1 ? 0U : static_cast<unsigned>(std::bit_width(count - 1));
}

}  // namespace detail

/// Keeps the k largest-magnitude entries, encodes their support as a
/// combinatorial (colex) index, and quantizes each retained real and
/// imaginary part to a b-bit two's-complement grid on [-1, 1) with step
/// 2^{1-b}. Optionally rescales the decoded vector to unit norm.
///
/// Rate: ceil(log2 C(n,k)) + 2kb bits.
class KSparseQuantizingCode final : public CompressionCode {
 public:
  KSparseQuantizingCode(Eigen::Index n, Eigen::Index k, unsigned bits, bool normalize)
      : n_(n), k_(k), bits_(bits), normalize_(normalize) {
    if (n < 1 || k < 1 || k > n) throw ArgumentError("KSparseQuantizingCode: need 1 <= k <= n");
    if (bits < 1 || bits > 30) throw ArgumentError("KSparseQuantizingCode: bits must be in [1, 30]");
    supports_ = detail::binomial(static_cast<std::uint64_t>(n), static_cast<std::uint64_t>(k));
    support_bits_ = detail::bits_for(supports_);
    step_ = std::ldexp(1.0, 1 - static_cast<int>(bits));
  }

  Eigen::Index dimension() const override { return n_; }
  Eigen::Index sparsity() const noexcept { return k_; }
  unsigned bits_per_component() const noexcept { return bits_; }
  bool normalizes() const noexcept { return normalize_; }
  double step() const noexcept { return step_; }
  unsigned support_bits() const noexcept { return support_bits_; }

  std::optional<std::size_t> fixed_rate() const override {
    return support_bits_ + 2U * static_cast<std::size_t>(k_) * bits_;
  }

  /// Nearest grid value; ties round toward zero; saturates at the grid ends.
  double quantize(double v) const { return static_cast<double>(level(v)) * step_; }

  CVec decode(const Bitstring& b) const override {
    if (b.size() != *fixed_rate()) throw ParseError("KSparseQuantizingCode: wrong bitstring length");
    std::size_t pos = 0;
    std::uint64_t rank = b.read(pos, support_bits_) % supports_;
    pos += support_bits_;
    const std::vector<Eigen::Index> support = unrank(rank);
    CVec out = CVec::Zero(n_);
    for (Eigen::Index idx : support) {
      const double re = from_field(b.read(pos, bits_));
      pos += bits_;
      const double im = from_field(b.read(pos, bits_));
      pos += bits_;
      out[idx] = Complex(re, im);
    }
    if (normalize_) {
      const double nrm = out.norm();
      if (nrm == 0.0) {
        out.setZero();
        out[0] = 1.0;  // canonical substitute for the zero codeword
      } else {
        out /= nrm;
      }
    }
    return out;
  }

  std::unique_ptr<CompressionCode> clone() const override {
    return std::make_unique<KSparseQuantizingCode>(*this);
  }

  std::string describe() const override {
    return "ksparse(n=" + std::to_string(n_) + ",k=" + std::to_string(k_) + ",b=" + std::to_string(bits_) +
           (normalize_ ? ",normalized)" : ")");
  }

 protected:
  Bitstring raw_encode(const CVec& s) const override {
    std::vector<Eigen::Index> order(static_cast<std::size_t>(n_));
    std::iota(order.begin(), order.end(), Eigen::Index{0});
    std::stable_sort(order.begin(), order.end(),
                     [&](Eigen::Index a, Eigen::Index b) { return std::abs(s[a]) > std::abs(s[b]); });
    std::vector<Eigen::Index> support(order.begin(), order.begin() + k_);
    std::sort(support.begin(), support.end());

    Bitstring b;
    b.push(rank(support), support_bits_);
    for (Eigen::Index idx : support) {
      b.push(to_field(s[idx].real()), bits_);
      b.push(to_field(s[idx].imag()), bits_);
    }
    return b;
  }

 private:
  std::int64_t level(double v) const {
    const double t = v / step_;
    const double mag = std::ceil(std::abs(t) - 0.5);  // round half toward zero
    auto j = static_cast<std::int64_t>(std::copysign(mag, t));
    const std::int64_t lo = -(std::int64_t{1} << (bits_ - 1));
    const std::int64_t hi = (std::int64_t{1} << (bits_ - 1)) - 1;
    return std::clamp(j, lo, hi);
  }

  std::uint64_t to_field(double v) const {
    const std::uint64_t mask = (std::uint64_t{1} << bits_) - 1;
    return static_cast<std::uint64_t>(level(v)) & mask;
  }

  double from_field(std::uint64_t f) const {
    const std::uint64_t sign = std::uint64_t{1} << (bits_ - 1);
    const std::int64_t j = (f & sign) != 0 ? static_cast<std::int64_t>(f) - (std::int64_t{1} << bits_)
                                          : static_cast<std::int64_t>(f);
    return static_cast<double>(j) * step_;
  }

  std::uint64_t rank(const std::vector<Eigen::Index>& support) const {
    std::uint64_t r = 0;
    for (std::size_t i = 0; i < support.size(); ++i) {
      r += detail::binomial(static_cast<std::uint64_t>(support[i]), i + 1);
    }
    return r;
  }

  std::vector<Eigen::Index> unrank(std::uint64_t r) const {
    std::vector<Eigen::Index> support(static_cast<std::size_t>(k_));
    std::uint64_t upper = static_cast<std::uint64_t>(n_);
    for (Eigen::Index i = k_; i-- > 0;) {
      std::uint64_t c = upper - 1;
      while (detail::binomial(c, static_cast<std::uint64_t>(i) + 1) > r) --c;
      support[static_cast<std::size_t>(i)] = static_cast<Eigen::Index>(c);
      r -= detail::binomial(c, static_cast<std::uint64_t>(i) + 1);
      upper = c;
    }
    return support;
  }

  Eigen::Index n_, k_;
  unsigned bits_;
  bool normalize_;
  std::uint64_t supports_ = 1;
  unsigned support_bits_ = 0;
  double step_ = 1.0;
};

/// Transform code for 8-bit grayscale images, standing in for a JPEG2000
/// quality layer.
///
/// Encoder: real part, clamp to [0, 255], orthonormal 2-D DCT-II, quantize
/// every coefficient to a 12-bit significand (ties toward zero, magnitudes
/// below 2^-24 flush to zero). The quality q acts as a compression ratio:
/// for q > 1 only the max_survivors() = ceil(N/q) largest quantized
/// coefficients survive (equal magnitudes resolved toward the lower
/// index), i.e. everything below the threshold t(q) = magnitude of the
/// ceil(N/q)-th largest coefficient is zeroed. For q <= 1, t(q) = 0 and
/// the code is near-lossless. Decoder: inverse DCT, clamp to [0, 255].
///
/// Bit layout: survivor count, then per survivor (in index order) the
/// coefficient index, sign, 6-bit biased exponent, 11-bit stored significand.
class DctThresholdCode final : public CompressionCode {
 public:
  static constexpr int kSignificandBits = 12;
  static constexpr int kMinExponent = -23;
  static constexpr unsigned kExponentBits = 6;

  DctThresholdCode(std::size_t rows, std::size_t cols, double quality)
      : rows_(rows), cols_(cols), quality_(check_quality(quality)) {
    if (rows == 0 || cols == 0) throw ArgumentError("DctThresholdCode: empty image shape");
    transform_ = std::make_shared<dct::Dct2d>(rows, cols);
    index_bits_ = detail::bits_for(size());
    count_bits_ = detail::bits_for(size() + 1);
  }

  Eigen::Index dimension() const override { return static_cast<Eigen::Index>(size()); }
  std::size_t size() const noexcept { return rows_ * cols_; }
  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  double quality() const noexcept { return quality_; }

  /// ceil(N / q) for q > 1, otherwise N.
  std::size_t max_survivors() const noexcept {
    if (quality_ <= 1.0) return size();
    return static_cast<std::size_t>(std::ceil(static_cast<double>(size()) / quality_));
  }

  bool has_quality() const override { return true; }

  std::unique_ptr<CompressionCode> at_quality(double q) const override {
    auto c = std::make_unique<DctThresholdCode>(*this);
    c->quality_ = check_quality(q);
    return c;
  }

  /// 12-bit significand quantizer applied to every coefficient.
  static double quantize(double c) {
    const auto f = fields(c);
    return f ? value_of(*f) : 0.0;
  }

  CVec decode(const Bitstring& b) const override {
    std::size_t pos = 0;
    const std::uint64_t count = b.read(pos, count_bits_);
    pos += count_bits_;
    if (count > size()) throw ParseError("DctThresholdCode: survivor count exceeds image size");
    std::vector<double> coeffs(size(), 0.0);
    for (std::uint64_t s = 0; s < count; ++s) {
      const std::uint64_t idx = b.read(pos, index_bits_);
      pos += index_bits_;
      Fields f;
      f.negative = b.read(pos, 1) != 0;
      pos += 1;
      f.exponent = static_cast<int>(b.read(pos, kExponentBits)) + kMinExponent;
      pos += kExponentBits;
      f.significand = static_cast<std::int64_t>(b.read(pos, kSignificandBits - 1)) + (1 << (kSignificandBits - 1));
      pos += kSignificandBits - 1;
      if (idx >= size()) throw ParseError("DctThresholdCode: coefficient index out of range");
      coeffs[idx] = value_of(f);
    }
    if (pos != b.size()) throw ParseError("DctThresholdCode: trailing bits");
    std::vector<double> pixels(size());
    transform_->inverse(coeffs, pixels);
    CVec out(static_cast<Eigen::Index>(size()));
    for (std::size_t i = 0; i < size(); ++i) out[static_cast<Eigen::Index>(i)] = std::clamp(pixels[i], 0.0, 255.0);
    return out;
  }

  std::unique_ptr<CompressionCode> clone() const override { return std::make_unique<DctThresholdCode>(*this); }

  std::string describe() const override {
    std::ostringstream os;
    os << "dct-threshold(" << rows_ << "x" << cols_ << ",q=" << quality_ << ")";
    return os.str();
  }

 protected:
  Bitstring raw_encode(const CVec& s) const override {
    std::vector<double> pixels(size());
    for (std::size_t i = 0; i < size(); ++i) {
      pixels[i] = std::clamp(s[static_cast<Eigen::Index>(i)].real(), 0.0, 255.0);
    }
    std::vector<double> coeffs(size());
    transform_->forward(pixels, coeffs);

    std::vector<std::pair<std::size_t, Fields>> kept;
    for (std::size_t i = 0; i < size(); ++i) {
      if (const auto f = fields(coeffs[i])) kept.emplace_back(i, *f);
    }
    const std::size_t budget = max_survivors();
    if (kept.size() > budget) {
      auto larger = [](const auto& a, const auto& b) {
        const double ma = std::abs(value_of(a.second)), mb = std::abs(value_of(b.second));
        return ma != mb ? ma > mb : a.first < b.first;
      };
      std::nth_element(kept.begin(), kept.begin() + static_cast<std::ptrdiff_t>(budget), kept.end(), larger);
      kept.resize(budget);
      std::sort(kept.begin(), kept.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
    }
    fit_range(kept);

    Bitstring b;
    b.push(kept.size(), count_bits_);
    for (const auto& [idx, f] : kept) {
      b.push(idx, index_bits_);
      b.push(f.negative ? 1 : 0, 1);
      b.push(static_cast<std::uint64_t>(f.exponent - kMinExponent), kExponentBits);
      b.push(static_cast<std::uint64_t>(f.significand - (1 << (kSignificandBits - 1))), kSignificandBits - 1);
    }
    return b;
  }

 private:
  struct Fields {
    bool negative = false;
    int exponent = 0;               // |value| = significand * 2^(exponent - 12)
    std::int64_t significand = 0;   // in [2^11, 2^12)
  };

  using Kept = std::vector<std::pair<std::size_t, Fields>>;

  // Shrinks the AC survivors toward the mean, requantizing each time, until
  // the reconstruction lies in [0, 255]. decode's clamp then never alters a
  // codeword, and re-encoding a codeword reproduces its bitstring. Without
  // this, clamp and requantization drift for thousands of rounds before
  // settling.
  void fit_range(Kept& kept) const {
    std::vector<double> coeffs(size()), pixels(size());
    auto reconstruct = [&] {
      std::fill(coeffs.begin(), coeffs.end(), 0.0);
      for (const auto& [idx, f] : kept) coeffs[idx] = value_of(f);
      transform_->inverse(coeffs, pixels);
      const auto [lo, hi] = std::minmax_element(pixels.begin(), pixels.end());
      return std::pair{*lo, *hi};
    };
    auto [lo, hi] = reconstruct();
    if (lo >= 0.0 && hi <= 255.0) return;

    const double root_n = std::sqrt(static_cast<double>(size()));
    const bool has_dc = !kept.empty() && kept.front().first == 0;
    if (has_dc) {
      // The DC term alone is the mean times sqrt(N); rounding can lift it past 255.
      while (value_of(kept.front().second) > 255.0 * root_n) kept.front().second = step_down(kept.front().second);
    }
    const double mean = has_dc ? value_of(kept.front().second) / root_n : 0.0;
    const Kept ac(kept.begin() + (has_dc ? 1 : 0), kept.end());

    double alpha = 1.0;
    for (int round = 0; round < 64 && !(lo >= 0.0 && hi <= 255.0); ++round) {
      double shrink = 1.0;
      if (hi > 255.0) shrink = std::min(shrink, (255.0 - mean) / (hi - mean));
      if (lo < 0.0) shrink = std::min(shrink, mean / (mean - lo));
      alpha *= std::max(0.0, shrink) * (1.0 - std::ldexp(1.0, round - 12));  // margin grows each round
      kept.resize(has_dc ? 1 : 0);
      for (const auto& [idx, f] : ac) {
        if (const auto g = fields(alpha * value_of(f))) kept.emplace_back(idx, *g);
      }
      std::tie(lo, hi) = reconstruct();
    }
    if (!(lo >= 0.0 && hi <= 255.0)) kept.resize(has_dc ? 1 : 0);  // flat image at the mean
  }

  static Fields step_down(Fields f) {
    if (f.significand > (1 << (kSignificandBits - 1))) {
      --f.significand;
    } else {
      f.significand = (1 << kSignificandBits) - 1;
      --f.exponent;
    }
    return f;
  }

  static double check_quality(double q) {
    if (!(q >= 0.0 && q <= 100.0)) throw ArgumentError("DctThresholdCode: quality must be in [0, 100]");
    return q;
  }

  static std::optional<Fields> fields(double c) {
    if (c == 0.0) return std::nullopt;
    int e = 0;
    const double f = std::frexp(std::abs(c), &e);  // |c| = f 2^e, f in [0.5, 1)
    auto sig = static_cast<std::int64_t>(std::ceil(f * (1 << kSignificandBits) - 0.5));
    if (sig == (1 << kSignificandBits)) {
      sig >>= 1;
      ++e;
    }
    if (e < kMinExponent) return std::nullopt;
    if (e > kMinExponent + (1 << kExponentBits) - 1) throw ArgumentError("DctThresholdCode: coefficient too large");
    return Fields{c < 0.0, e, sig};
  }

  static double value_of(const Fields& f) {
    const double mag = std::ldexp(static_cast<double>(f.significand), f.exponent - kSignificandBits);
    return f.negative ? -mag : mag;
  }

  std::size_t rows_, cols_;
  double quality_;
  std::shared_ptr<dct::Dct2d> transform_;
  unsigned index_bits_ = 0;
  unsigned count_bits_ = 0;
};

/// The image of decode(encode(.)): every distinct project(decode(b)) over
/// b in {0,1}^r, in order of first appearance. Only fixed-rate codes with
/// r <= 20 are enumerable.
inline std::vector<CVec> enumerate_codebook(const CompressionCode& code) {
  const auto rate = code.fixed_rate();
  if (!rate) throw ArgumentError("enumerate_codebook: code has no fixed rate");
  if (*rate > 20) throw TooLargeError("enumerate_codebook: rate " + std::to_string(*rate) + " exceeds 20 bits");
  std::vector<CVec> book;
  std::map<std::vector<double>, std::size_t> seen;
  const std::uint64_t total = std::uint64_t{1} << *rate;
  for (std::uint64_t v = 0; v < total; ++v) {
    CVec c = project(code, code.decode(Bitstring::of(v, static_cast<unsigned>(*rate))));
    std::vector<double> key(static_cast<std::size_t>(2 * c.size()));
    for (Eigen::Index i = 0; i < c.size(); ++i) {
      key[static_cast<std::size_t>(2 * i)] = c[i].real();
      key[static_cast<std::size_t>(2 * i + 1)] = c[i].imag();
    }
    if (seen.emplace(std::move(key), book.size()).second) book.push_back(std::move(c));
  }
  return book;
}

/// Plain-text codebook dump: one `bits re,im re,im ...` line per bitstring.
inline void dump_codebook(const CompressionCode& code, std::ostream& os) {
  const auto rate = code.fixed_rate();
  if (!rate) throw ArgumentError("dump_codebook: code has no fixed rate");
  if (*rate > 20) throw TooLargeError("dump_codebook: rate exceeds 20 bits");
  const std::uint64_t total = std::uint64_t{1} << *rate;
  os.precision(17);
  for (std::uint64_t v = 0; v < total; ++v) {
    const Bitstring b = Bitstring::of(v, static_cast<unsigned>(*rate));
    const CVec c = code.decode(b);
    os << b.to_string();
    for (Eigen::Index i = 0; i < c.size(); ++i) os << ' ' << c[i].real() << ',' << c[i].imag();
    os << '\n';
  }
}

/// Largest round-trip error ||x - D(E(x))|| over `signals`.
inline double measure_distortion(const CompressionCode& code, const std::vector<CVec>& signals) {
  if (signals.empty()) throw EmptyInputError("measure_distortion: empty signal list");
  double worst = 0.0;
  for (const auto& x : signals) worst = std::max(worst, (x - project(code, x)).norm());
  return worst;
}

struct RatePoint {
  double rate = 0.0;        // bits
  double distortion = 0.0;  // delta(r)
};

/// Least-squares slope of r against log2(1/delta).
inline double alpha_dimension_estimate(const std::vector<RatePoint>& family) {
  if (family.size() < 3) throw DegenerateError("alpha_dimension_estimate: need at least 3 points");
  std::vector<double> u, r;
  for (const auto& p : family) {
    if (!(p.distortion > 0.0)) throw DegenerateError("alpha_dimension_estimate: distortion must be positive");
    u.push_back(std::log2(1.0 / p.distortion));
    r.push_back(p.rate);
  }
  const double nu = static_cast<double>(u.size());
  const double mu = std::accumulate(u.begin(), u.end(), 0.0) / nu;
  const double mr = std::accumulate(r.begin(), r.end(), 0.0) / nu;
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < u.size(); ++i) {
    sxx += (u[i] - mu) * (u[i] - mu);
    sxy += (u[i] - mu) * (r[i] - mr);
  }
  if (sxx <= 1e-300) throw DegenerateError("alpha_dimension_estimate: all distortions equal");
  return sxy / sxx;
}

}  // namespace coper
