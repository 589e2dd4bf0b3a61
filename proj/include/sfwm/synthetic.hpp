#pragma once

// Procedural face-like test images: a shaded head ellipse with eyes and
// mouth over a textured background. Used where no photo corpus is at hand.

#include <cmath>
#include <numbers>
#include <vector>

#include "sfwm/common.hpp"
#include "sfwm/image.hpp"

namespace sfwm {

namespace detail {

inline bool inside_ellipse(double x, double y, double cx, double cy, double rx, double ry) {
  const double dx = (x - cx) / rx, dy = (y - cy) / ry;
  return dx * dx + dy * dy <= 1.0;
}

inline double jitter(rng_t& rng, double lo, double hi) { return lo + (hi - lo) * uniform01(rng); }

}  // namespace detail

inline image synthetic_face(std::size_t height, std::size_t width, rng_t& rng) {
  using detail::jitter;
  image img(height, width);
  const double h = static_cast<double>(height), w = static_cast<double>(width);

  double bg0[3], bg1[3], skin[3], hair[3];
  for (int c = 0; c < 3; ++c) {
    bg0[c] = jitter(rng, 0.1, 0.9);
    bg1[c] = jitter(rng, 0.1, 0.9);
    hair[c] = jitter(rng, 0.0, 0.35);
  }
  const double tone = jitter(rng, 0.35, 0.9);
  skin[0] = tone;
  skin[1] = tone * jitter(rng, 0.7, 0.85);
  skin[2] = tone * jitter(rng, 0.55, 0.75);

  const double cx = w * jitter(rng, 0.42, 0.58), cy = h * jitter(rng, 0.48, 0.58);
  const double rx = w * jitter(rng, 0.22, 0.32), ry = h * jitter(rng, 0.30, 0.40);
  const double eye_dx = rx * jitter(rng, 0.35, 0.5), eye_y = cy - ry * jitter(rng, 0.15, 0.3);
  const double eye_r = rx * jitter(rng, 0.1, 0.16);
  const double mouth_y = cy + ry * jitter(rng, 0.4, 0.55), mouth_rx = rx * jitter(rng, 0.25, 0.45);

  struct wave {
    double fx, fy, phase, amp;
  };
  std::vector<wave> waves;
  for (int i = 0; i < 6; ++i)
    waves.push_back({jitter(rng, -0.6, 0.6), jitter(rng, -0.6, 0.6), jitter(rng, 0, 2 * std::numbers::pi),
                     jitter(rng, 0.01, 0.06)});
  const double light_x = jitter(rng, -1, 1), light_y = jitter(rng, -1, 1);

  for (std::size_t yy = 0; yy < height; ++yy)
    for (std::size_t xx = 0; xx < width; ++xx) {
      const double x = static_cast<double>(xx) + 0.5, y = static_cast<double>(yy) + 0.5;
      double texture = 0;
      for (const auto& wv : waves) texture += wv.amp * std::sin(wv.fx * x + wv.fy * y + wv.phase);
      double rgb[3];
      const double t = y / h;
      for (int c = 0; c < 3; ++c) rgb[c] = bg0[c] * (1 - t) + bg1[c] * t + texture;

      if (detail::inside_ellipse(x, y, cx, cy - ry * 0.15, rx * 1.08, ry * 0.95) && y < cy)
        for (int c = 0; c < 3; ++c) rgb[c] = hair[c] + 0.5 * texture;
      if (detail::inside_ellipse(x, y, cx, cy, rx, ry)) {
        const double nx = (x - cx) / rx, ny = (y - cy) / ry;
        const double shade = 0.8 + 0.2 * (nx * light_x + ny * light_y) + 0.3 * texture;
        for (int c = 0; c < 3; ++c) rgb[c] = skin[c] * shade;
        for (double side : {-1.0, 1.0})
          if (detail::inside_ellipse(x, y, cx + side * eye_dx, eye_y, eye_r * 1.5, eye_r)) {
            const bool pupil = detail::inside_ellipse(x, y, cx + side * eye_dx, eye_y, eye_r * 0.6, eye_r * 0.6);
            for (int c = 0; c < 3; ++c) rgb[c] = pupil ? 0.08 : 0.92;
          }
        if (detail::inside_ellipse(x, y, cx, mouth_y, mouth_rx, ry * 0.07))
          for (int c = 0; c < 3; ++c) rgb[c] = skin[c] * (c == 0 ? 0.75 : 0.45);
      }
      for (int c = 0; c < 3; ++c)
        img.at(c, yy, xx) = static_cast<float>(rgb[c] + jitter(rng, -0.015, 0.015));
    }
  return quantize8(std::move(img));
}

inline std::vector<image> synthetic_faces(std::size_t count, std::size_t size, std::uint64_t seed) {
  rng_t rng(seed);
  std::vector<image> out;
  out.reserve(count);
  for (std::size_t i = 0; i < count; ++i) out.push_back(synthetic_face(size, size, rng));
  return out;
}

}  // namespace sfwm
