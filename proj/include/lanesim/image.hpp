#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <vector>

#include "lanesim/errors.hpp"

namespace lanesim {

struct Rgb {
  uint8_t r = 0, g = 0, b = 0;
  bool operator==(const Rgb&) const = default;
};

/// Row-major 8-bit RGB raster.
struct Image {
  int width = 0;
  int height = 0;
  std::vector<uint8_t> data;  // width*height*3

  Image() = default;
  Image(int w, int h, Rgb fill = {0, 0, 0}) : width(w), height(h) {
    if (w <= 0 || h <= 0) throw DomainError("image dimensions must be positive");
    data.resize(static_cast<size_t>(w) * h * 3);
    for (size_t i = 0; i < data.size(); i += 3) {
      data[i] = fill.r;
      data[i + 1] = fill.g;
      data[i + 2] = fill.b;
    }
  }

  size_t offset(int col, int row) const {
    return (static_cast<size_t>(row) * width + col) * 3;
  }

  Rgb get(int col, int row) const {
    size_t o = offset(col, row);
    return {data[o], data[o + 1], data[o + 2]};
  }

  void set(int col, int row, Rgb c) {
    size_t o = offset(col, row);
    data[o] = c.r;
    data[o + 1] = c.g;
    data[o + 2] = c.b;
  }

  bool same_size(const Image& o) const {
    return width == o.width && height == o.height;
  }

  bool operator==(const Image&) const = default;
};

/// Bilinear sample at fractional pixel coordinates, border-clamped
/// (out-of-range coordinates replicate the nearest edge pixel).
inline Rgb bilinear_sample(const Image& img, double col, double row) {
  double c = std::clamp(col, 0.0, static_cast<double>(img.width - 1));
  double r = std::clamp(row, 0.0, static_cast<double>(img.height - 1));
  int c0 = static_cast<int>(c);
  int r0 = static_cast<int>(r);
  int c1 = std::min(c0 + 1, img.width - 1);
  int r1 = std::min(r0 + 1, img.height - 1);
  double fc = c - c0;
  double fr = r - r0;
  Rgb p00 = img.get(c0, r0), p10 = img.get(c1, r0);
  Rgb p01 = img.get(c0, r1), p11 = img.get(c1, r1);
  auto mix = [&](double a, double b, double c2, double d) {
    double top = a + (b - a) * fc;
    double bot = c2 + (d - c2) * fc;
    return top + (bot - top) * fr;
  };
  auto q = [](double v) {
    return static_cast<uint8_t>(std::clamp(std::lround(v), 0L, 255L));
  };
  return {q(mix(p00.r, p10.r, p01.r, p11.r)),
          q(mix(p00.g, p10.g, p01.g, p11.g)),
          q(mix(p00.b, p10.b, p01.b, p11.b))};
}

/// Mean absolute per-channel difference in [0, 255] units.
inline double mean_abs_diff(const Image& a, const Image& b) {
  if (!a.same_size(b)) throw DomainError("mean_abs_diff: size mismatch");
  if (a.data.empty()) return 0.0;
  double sum = 0.0;
  for (size_t i = 0; i < a.data.size(); ++i)
    sum += std::abs(static_cast<int>(a.data[i]) - static_cast<int>(b.data[i]));
  return sum / static_cast<double>(a.data.size());
}

inline int max_abs_diff(const Image& a, const Image& b) {
  if (!a.same_size(b)) throw DomainError("max_abs_diff: size mismatch");
  int m = 0;
  for (size_t i = 0; i < a.data.size(); ++i)
    m = std::max(m, std::abs(static_cast<int>(a.data[i]) - static_cast<int>(b.data[i])));
  return m;
}

}  // namespace lanesim
