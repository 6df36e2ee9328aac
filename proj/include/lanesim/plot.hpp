#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "lanesim/image.hpp"
#include "lanesim/simloop.hpp"

namespace lanesim {

// Minimal raster plotting: enough for deviation traces and trajectory
// overlays. Numbers only; context lives in file names and the text report.

namespace plotdetail {

// 5x7 glyphs for digits and number punctuation, one byte per row, low 5 bits.
struct Glyph {
  char ch;
  uint8_t rows[7];
};

inline const Glyph* find_glyph(char c) {
  static const Glyph table[] = {
      {'0', {0x0e, 0x11, 0x13, 0x15, 0x19, 0x11, 0x0e}},
      {'1', {0x04, 0x0c, 0x04, 0x04, 0x04, 0x04, 0x0e}},
      {'2', {0x0e, 0x11, 0x01, 0x02, 0x04, 0x08, 0x1f}},
      {'3', {0x1f, 0x02, 0x04, 0x02, 0x01, 0x11, 0x0e}},
      {'4', {0x02, 0x06, 0x0a, 0x12, 0x1f, 0x02, 0x02}},
      {'5', {0x1f, 0x10, 0x1e, 0x01, 0x01, 0x11, 0x0e}},
      {'6', {0x06, 0x08, 0x10, 0x1e, 0x11, 0x11, 0x0e}},
      {'7', {0x1f, 0x01, 0x02, 0x04, 0x08, 0x08, 0x08}},
      {'8', {0x0e, 0x11, 0x11, 0x0e, 0x11, 0x11, 0x0e}},
      {'9', {0x0e, 0x11, 0x11, 0x0f, 0x01, 0x02, 0x0c}},
      {'.', {0x00, 0x00, 0x00, 0x00, 0x00, 0x0c, 0x0c}},
      {'-', {0x00, 0x00, 0x00, 0x0e, 0x00, 0x00, 0x00}},
      {'+', {0x00, 0x04, 0x04, 0x1f, 0x04, 0x04, 0x00}},
      {'s', {0x00, 0x00, 0x0f, 0x10, 0x0e, 0x01, 0x1e}},
      {'m', {0x00, 0x00, 0x1a, 0x15, 0x15, 0x15, 0x15}},
  };
  for (const auto& g : table)
    if (g.ch == c) return &g;
  return nullptr;
}

}  // namespace plotdetail

class Canvas {
 public:
  Canvas(int w, int h, Rgb background = {250, 250, 248}) : img_(w, h, background) {}

  Image& image() { return img_; }
  const Image& image() const { return img_; }

  void put(int x, int y, Rgb c) {
    if (x >= 0 && x < img_.width && y >= 0 && y < img_.height) img_.set(x, y, c);
  }

  void line(int x0, int y0, int x1, int y1, Rgb c) {
    int dx = std::abs(x1 - x0), dy = -std::abs(y1 - y0);
    int sx = x0 < x1 ? 1 : -1, sy = y0 < y1 ? 1 : -1;
    int err = dx + dy;
    for (;;) {
      put(x0, y0, c);
      if (x0 == x1 && y0 == y1) break;
      int e2 = 2 * err;
      if (e2 >= dy) {
        err += dy;
        x0 += sx;
      }
      if (e2 <= dx) {
        err += dx;
        y0 += sy;
      }
    }
  }

  void disc(int cx, int cy, int r, Rgb c) {
    for (int y = -r; y <= r; ++y)
      for (int x = -r; x <= r; ++x)
        if (x * x + y * y <= r * r) put(cx + x, cy + y, c);
  }

  void text(int x, int y, const std::string& s, Rgb c) {
    for (char ch : s) {
      const auto* g = plotdetail::find_glyph(ch);
      if (g) {
        for (int r = 0; r < 7; ++r)
          for (int b = 0; b < 5; ++b)
            if (g->rows[r] & (1 << (4 - b))) put(x + b, y + r, c);
      }
      x += 6;
    }
  }

 private:
  Image img_;
};

inline std::string plot_number(double v, int decimals = 1) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.*f", decimals, v);
  return buf;
}

/// Lateral deviation over time with the recovery threshold band and a
/// vertical marker at every recovery.
inline Image plot_deviation_trace(const SequenceResult& res, double threshold) {
  const int W = 900, H = 300, ML = 52, MR = 12, MT = 12, MB = 28;
  Canvas cv(W, H);
  const Rgb axis{70, 70, 70}, grid{210, 210, 210}, band{230, 170, 170};
  const Rgb trace{60, 90, 200}, marker{210, 50, 40};

  double tmax = std::max(res.driving_time, 1e-9);
  double ymax = threshold * 1.25;
  for (double v : res.de) ymax = std::max(ymax, std::abs(v) * 1.1);

  auto X = [&](double t) { return ML + static_cast<int>((W - ML - MR) * t / tmax); };
  auto Y = [&](double v) {
    return MT + static_cast<int>((H - MT - MB) * (1.0 - (v + ymax) / (2.0 * ymax)));
  };

  cv.line(ML, Y(0.0), W - MR, Y(0.0), grid);
  for (double b : {threshold, -threshold}) {
    cv.line(ML, Y(b), W - MR, Y(b), band);
    cv.text(4, Y(b) - 3, plot_number(b, 1), axis);
  }
  cv.text(4, Y(0.0) - 3, "0.0", axis);

  for (size_t i = 0; i < res.de.size(); ++i) {
    if (res.recovery[i]) {
      int x = X(static_cast<double>(i + 1) * res.dt);
      cv.line(x, MT, x, H - MB, marker);
    }
  }
  for (size_t i = 1; i < res.de.size(); ++i) {
    cv.line(X(static_cast<double>(i) * res.dt), Y(res.de[i - 1]),
            X(static_cast<double>(i + 1) * res.dt), Y(res.de[i]), trace);
  }

  cv.line(ML, MT, ML, H - MB, axis);
  cv.line(ML, H - MB, W - MR, H - MB, axis);
  for (int k = 0; k <= 4; ++k) {
    double t = tmax * k / 4.0;
    cv.text(X(t) - 8, H - MB + 6, plot_number(t, 1) + "s", axis);
  }
  return cv.image();
}

/// Human (blue) and controller-driven (red) trajectories, equal aspect,
/// recoveries marked on the controller path.
inline Image plot_trajectories(const SequenceResult& res) {
  const int W = 700, H = 700, M = 30;
  Canvas cv(W, H);
  const Rgb blue{60, 90, 200}, red{210, 50, 40}, axis{70, 70, 70}, green{40, 150, 60};

  double xmin = 1e300, xmax = -1e300, ymin = 1e300, ymax = -1e300;
  for (const auto& traces : {&res.human, &res.network}) {
    for (const auto& p : *traces) {
      xmin = std::min(xmin, p.x);
      xmax = std::max(xmax, p.x);
      ymin = std::min(ymin, p.y);
      ymax = std::max(ymax, p.y);
    }
  }
  if (xmin > xmax) return cv.image();
  double span = std::max({xmax - xmin, ymax - ymin, 1.0});
  double cxm = (xmin + xmax) / 2.0, cym = (ymin + ymax) / 2.0;
  double scale = (std::min(W, H) - 2.0 * M) / span;

  // World x points up the canvas so "forward" reads upward.
  auto X = [&](const Pose2D& p) { return W / 2 + static_cast<int>((p.y - cym) * -scale); };
  auto Y = [&](const Pose2D& p) { return H / 2 - static_cast<int>((p.x - cxm) * scale); };

  for (size_t i = 1; i < res.human.size(); ++i)
    cv.line(X(res.human[i - 1]), Y(res.human[i - 1]), X(res.human[i]), Y(res.human[i]), blue);
  for (size_t i = 1; i < res.network.size(); ++i)
    cv.line(X(res.network[i - 1]), Y(res.network[i - 1]), X(res.network[i]), Y(res.network[i]), red);
  if (!res.human.empty()) cv.disc(X(res.human[0]), Y(res.human[0]), 4, green);
  for (size_t i = 0; i < res.network.size(); ++i)
    if (res.recovery[i]) cv.disc(X(res.network[i]), Y(res.network[i]), 3, red);

  cv.text(6, 6, plot_number(span, 0) + "m", axis);
  return cv.image();
}

}  // namespace lanesim
