// Copyright 2026 The coper Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

// Portable graymap (P2 ASCII, P5 binary) intake and output. Pixels are
// held row-major as doubles in [0, 255]; files with another maxval are
// rescaled on load.

#include "coper/core.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <iterator>
#include <string>
#include <vector>

namespace coper::harness {

struct Image {
  std::size_t rows = 0;
  std::size_t cols = 0;
  RVec pixels;  // row-major

  std::size_t size() const noexcept { return rows * cols; }
  double at(std::size_t r, std::size_t c) const { return pixels[static_cast<Eigen::Index>(r * cols + c)]; }
};

namespace detail {

class PgmReader {
 public:
  explicit PgmReader(std::string bytes) : s_(std::move(bytes)) {}

  // Next whitespace-delimited header token; '#' starts a comment line.
  std::string token() {
    skip_space_and_comments();
    std::string t;
    while (pos_ < s_.size() && !std::isspace(static_cast<unsigned char>(s_[pos_])) && s_[pos_] != '#') t += s_[pos_++];
    if (t.empty()) throw ParseError("pgm: unexpected end of header");
    return t;
  }

  unsigned long number() {
    const std::string t = token();
    if (!std::all_of(t.begin(), t.end(), [](char c) { return std::isdigit(static_cast<unsigned char>(c)); })) {
      throw ParseError("pgm: expected a number, got '" + t + "'");
    }
    return std::stoul(t);
  }

  // Exactly one whitespace byte separates the header from binary data.
  void end_header() {
    if (pos_ >= s_.size() || !std::isspace(static_cast<unsigned char>(s_[pos_]))) {
      throw ParseError("pgm: missing whitespace before pixel data");
    }
    ++pos_;
  }

  std::size_t remaining() const { return s_.size() - pos_; }
  unsigned char byte() { return static_cast<unsigned char>(s_[pos_++]); }

 private:
  void skip_space_and_comments() {
    while (pos_ < s_.size()) {
      if (std::isspace(static_cast<unsigned char>(s_[pos_]))) {
        ++pos_;
      } else if (s_[pos_] == '#') {
        while (pos_ < s_.size() && s_[pos_] != '\n') ++pos_;
      } else {
        break;
      }
    }
  }

  std::string s_;
  std::size_t pos_ = 0;
};

}  // namespace detail

inline Image parse_pgm(const std::string& bytes) {
  detail::PgmReader in(bytes);
  const std::string magic = in.token();
  if (magic != "P2" && magic != "P5") throw ParseError("pgm: unsupported magic '" + magic + "'");
  Image img;
  img.cols = in.number();
  img.rows = in.number();
  const unsigned long maxval = in.number();
  if (img.rows == 0 || img.cols == 0) throw ParseError("pgm: empty image");
  if (maxval == 0 || maxval > 65535) throw ParseError("pgm: maxval out of range");
  img.pixels.resize(static_cast<Eigen::Index>(img.size()));
  const double scale = 255.0 / static_cast<double>(maxval);

  if (magic == "P2") {
    for (std::size_t i = 0; i < img.size(); ++i) {
      const unsigned long v = in.number();
      if (v > maxval) throw ParseError("pgm: pixel exceeds maxval");
      img.pixels[static_cast<Eigen::Index>(i)] = static_cast<double>(v) * scale;
    }
    return img;
  }
  in.end_header();
  const std::size_t width = maxval < 256 ? 1 : 2;
  if (in.remaining() < img.size() * width) throw ParseError("pgm: truncated pixel data");
  for (std::size_t i = 0; i < img.size(); ++i) {
    unsigned long v = in.byte();
    if (width == 2) v = (v << 8U) | in.byte();
    if (v > maxval) throw ParseError("pgm: pixel exceeds maxval");
    img.pixels[static_cast<Eigen::Index>(i)] = static_cast<double>(v) * scale;
  }
  return img;
}

/// 2x2 box average; odd trailing rows/columns are dropped.
inline Image downsample2x(const Image& in) {
  if (in.rows < 2 || in.cols < 2) throw ArgumentError("downsample2x: image smaller than 2x2");
  Image out;
  out.rows = in.rows / 2;
  out.cols = in.cols / 2;
  out.pixels.resize(static_cast<Eigen::Index>(out.size()));
  for (std::size_t r = 0; r < out.rows; ++r) {
    for (std::size_t c = 0; c < out.cols; ++c) {
      const double s = in.at(2 * r, 2 * c) + in.at(2 * r, 2 * c + 1) + in.at(2 * r + 1, 2 * c) + in.at(2 * r + 1, 2 * c + 1);
      out.pixels[static_cast<Eigen::Index>(r * out.cols + c)] = 0.25 * s;
    }
  }
  return out;
}

/// Halves the image until it is at most `side` pixels on each axis.
inline Image downsample_to(Image img, std::size_t side) {
  while (img.rows > side || img.cols > side) img = downsample2x(img);
  return img;
}

inline Image load_image(const std::string& path, bool downsample = false, std::size_t side = 128) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw ParseError("cannot open image '" + path + "'");
  std::string bytes((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
  Image img = parse_pgm(bytes);
  return downsample ? downsample_to(std::move(img), side) : img;
}

/// Writes an 8-bit binary graymap, rounding and clamping to [0, 255].
inline void save_pgm(const std::string& path, const Image& img) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw ParseError("cannot write image '" + path + "'");
  f << "P5\n" << img.cols << ' ' << img.rows << "\n255\n";
  for (Eigen::Index i = 0; i < img.pixels.size(); ++i) {
    f.put(static_cast<char>(static_cast<unsigned char>(std::clamp(std::round(img.pixels[i]), 0.0, 255.0))));
  }
}

}  // namespace coper::harness
