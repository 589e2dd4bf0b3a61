#pragma once

// Benign post-processing operations (blur, crop, resize) with their adjoints,
// plus the SSIM quality metric. All functions are pure.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <vector>

#include "sfwm/common.hpp"
#include "sfwm/image.hpp"

namespace sfwm {

namespace detail {

// Reflect-101 folding (x[-1] = x[1]) for arbitrary offsets.
inline std::size_t reflect_index(std::ptrdiff_t i, std::size_t n) {
  if (n == 1) return 0;
  const std::ptrdiff_t period = 2 * (static_cast<std::ptrdiff_t>(n) - 1);
  i = std::abs(i) % period;
  if (i >= static_cast<std::ptrdiff_t>(n)) i = period - i;
  return static_cast<std::size_t>(i);
}

// floor(fraction * n) with tolerance for binary representation of grid values
// such as 0.7 * 10.
inline std::size_t scaled_extent(double fraction, std::size_t n) {
  return static_cast<std::size_t>(std::floor(fraction * static_cast<double>(n) + 1e-9));
}

}  // namespace detail

// Normalized 1-D Gaussian taps for radius ceil(3 sigma); a single tap of 1
// when the variance is zero.
inline std::vector<double> gaussian_taps(double variance) {
  if (!(variance >= 0.0) || !std::isfinite(variance))
    throw parameter_error("gaussian blur variance must be finite and >= 0");
  if (variance == 0.0) return {1.0};
  const double sigma = std::sqrt(variance);
  const auto radius = static_cast<std::ptrdiff_t>(std::ceil(3.0 * sigma));
  std::vector<double> taps(static_cast<std::size_t>(2 * radius + 1));
  double sum = 0;
  for (std::ptrdiff_t k = -radius; k <= radius; ++k) {
    const double v = std::exp(-static_cast<double>(k * k) / (2.0 * variance));
    taps[static_cast<std::size_t>(k + radius)] = v;
    sum += v;
  }
  for (auto& v : taps) v /= sum;
  return taps;
}

namespace detail {

// One separable pass along rows (horizontal == true) or columns. When adjoint
// is set, the transpose of the same linear map is applied.
template <typename T>
void blur_pass(const T* in, T* out, std::size_t h, std::size_t w, const std::vector<double>& taps,
               bool horizontal, bool adjoint) {
  const auto radius = static_cast<std::ptrdiff_t>(taps.size() / 2);
  const std::size_t n = horizontal ? w : h;
  const std::size_t lines = horizontal ? h : w;
  auto idx = [&](std::size_t line, std::size_t pos) {
    return horizontal ? line * w + pos : pos * w + line;
  };
  std::vector<double> acc(n);
  for (std::size_t line = 0; line < lines; ++line) {
    std::fill(acc.begin(), acc.end(), 0.0);
    for (std::size_t i = 0; i < n; ++i) {
      for (std::ptrdiff_t k = -radius; k <= radius; ++k) {
        const std::size_t j = reflect_index(static_cast<std::ptrdiff_t>(i) + k, n);
        const double wgt = taps[static_cast<std::size_t>(k + radius)];
        if (adjoint)
          acc[j] += wgt * static_cast<double>(in[idx(line, i)]);
        else
          acc[i] += wgt * static_cast<double>(in[idx(line, j)]);
      }
    }
    for (std::size_t i = 0; i < n; ++i) out[idx(line, i)] = static_cast<T>(acc[i]);
  }
}

template <typename T>
basic_image<T> blur_impl(const basic_image<T>& img, double variance, bool adjoint) {
  const auto taps = gaussian_taps(variance);
  if (taps.size() == 1) return img;
  basic_image<T> tmp(img.height(), img.width());
  basic_image<T> out(img.height(), img.width());
  for (std::size_t c = 0; c < kChannels; ++c) {
    if (!adjoint) {
      blur_pass(img.plane(c), tmp.plane(c), img.height(), img.width(), taps, true, false);
      blur_pass(tmp.plane(c), out.plane(c), img.height(), img.width(), taps, false, false);
    } else {
      blur_pass(img.plane(c), tmp.plane(c), img.height(), img.width(), taps, false, true);
      blur_pass(tmp.plane(c), out.plane(c), img.height(), img.width(), taps, true, true);
    }
  }
  return out;
}

}  // namespace detail

template <typename T>
basic_image<T> gaussian_blur(const basic_image<T>& img, double variance) {
  return detail::blur_impl(img, variance, false);
}

// Transpose of gaussian_blur; maps output gradients to input gradients.
template <typename T>
basic_image<T> gaussian_blur_backward(const basic_image<T>& grad_out, double variance) {
  return detail::blur_impl(grad_out, variance, true);
}

struct crop_window {
  std::size_t top, left, height, width;
};

inline crop_window centered_crop(std::size_t h, std::size_t w, double size) {
  if (!(size > 0.0) || size > 1.0) throw parameter_error("crop size must lie in (0, 1]");
  const std::size_t ch = detail::scaled_extent(size, h);
  const std::size_t cw = detail::scaled_extent(size, w);
  if (ch < kMinImageSide || cw < kMinImageSide)
    throw parameter_error("crop would produce an image smaller than 8x8");
  return {(h - ch) / 2, (w - cw) / 2, ch, cw};
}

template <typename T>
basic_image<T> crop(const basic_image<T>& img, double size) {
  const auto win = centered_crop(img.height(), img.width(), size);
  basic_image<T> out(win.height, win.width);
  for (std::size_t c = 0; c < kChannels; ++c)
    for (std::size_t y = 0; y < win.height; ++y)
      std::copy_n(&img.at(c, win.top + y, win.left), win.width, &out.at(c, y, 0));
  return out;
}

template <typename T>
basic_image<T> crop_backward(const basic_image<T>& grad_out, std::size_t src_h, std::size_t src_w,
                             double size) {
  const auto win = centered_crop(src_h, src_w, size);
  if (grad_out.height() != win.height || grad_out.width() != win.width)
    throw shape_error("crop_backward: gradient shape does not match crop window");
  basic_image<T> out(src_h, src_w);
  for (std::size_t c = 0; c < kChannels; ++c)
    for (std::size_t y = 0; y < win.height; ++y)
      std::copy_n(&grad_out.at(c, y, 0), win.width, &out.at(c, win.top + y, win.left));
  return out;
}

namespace detail {

struct bilinear_tap {
  std::size_t i0, i1;
  double w0, w1;
};

// Half-pixel-centre sampling (align_corners = false); sources below zero
// clamp to the first sample.
inline std::vector<bilinear_tap> bilinear_taps(std::size_t in, std::size_t out) {
  std::vector<bilinear_tap> taps(out);
  const double scale = static_cast<double>(in) / static_cast<double>(out);
  for (std::size_t o = 0; o < out; ++o) {
    double src = std::max(0.0, (static_cast<double>(o) + 0.5) * scale - 0.5);
    auto i0 = static_cast<std::size_t>(std::floor(src));
    if (i0 > in - 1) i0 = in - 1;
    const std::size_t i1 = std::min(i0 + 1, in - 1);
    const double lam = std::min(1.0, src - static_cast<double>(i0));
    taps[o] = {i0, i1, 1.0 - lam, lam};
  }
  return taps;
}

}  // namespace detail

inline std::pair<std::size_t, std::size_t> resized_shape(std::size_t h, std::size_t w, double ratio) {
  if (!(ratio > 0.0) || !std::isfinite(ratio)) throw parameter_error("resize ratio must be positive");
  const std::size_t rh = detail::scaled_extent(ratio, h);
  const std::size_t rw = detail::scaled_extent(ratio, w);
  if (rh < kMinImageSide || rw < kMinImageSide)
    throw parameter_error("resize would produce an image smaller than 8x8");
  return {rh, rw};
}

// Bilinear resampling to an explicit output size.
template <typename T>
basic_image<T> resize_to(const basic_image<T>& img, std::size_t out_h, std::size_t out_w) {
  const auto ty = detail::bilinear_taps(img.height(), out_h);
  const auto tx = detail::bilinear_taps(img.width(), out_w);
  basic_image<T> out(out_h, out_w);
  for (std::size_t c = 0; c < kChannels; ++c)
    for (std::size_t y = 0; y < out_h; ++y)
      for (std::size_t x = 0; x < out_w; ++x) {
        const auto& a = ty[y];
        const auto& b = tx[x];
        const double v = a.w0 * (b.w0 * img.at(c, a.i0, b.i0) + b.w1 * img.at(c, a.i0, b.i1)) +
                         a.w1 * (b.w0 * img.at(c, a.i1, b.i0) + b.w1 * img.at(c, a.i1, b.i1));
        out.at(c, y, x) = static_cast<T>(v);
      }
  return out;
}

template <typename T>
basic_image<T> resize_to_backward(const basic_image<T>& grad_out, std::size_t src_h, std::size_t src_w) {
  const auto ty = detail::bilinear_taps(src_h, grad_out.height());
  const auto tx = detail::bilinear_taps(src_w, grad_out.width());
  std::vector<double> acc(kChannels * src_h * src_w, 0.0);
  auto at = [&](std::size_t c, std::size_t y, std::size_t x) -> double& {
    return acc[(c * src_h + y) * src_w + x];
  };
  for (std::size_t c = 0; c < kChannels; ++c)
    for (std::size_t y = 0; y < grad_out.height(); ++y)
      for (std::size_t x = 0; x < grad_out.width(); ++x) {
        const double g = grad_out.at(c, y, x);
        const auto& a = ty[y];
        const auto& b = tx[x];
        at(c, a.i0, b.i0) += g * a.w0 * b.w0;
        at(c, a.i0, b.i1) += g * a.w0 * b.w1;
        at(c, a.i1, b.i0) += g * a.w1 * b.w0;
        at(c, a.i1, b.i1) += g * a.w1 * b.w1;
      }
  basic_image<T> out(src_h, src_w);
  std::transform(acc.begin(), acc.end(), out.data().begin(), [](double v) { return static_cast<T>(v); });
  return out;
}

template <typename T>
basic_image<T> resize(const basic_image<T>& img, double ratio) {
  const auto [h, w] = resized_shape(img.height(), img.width(), ratio);
  if (h == img.height() && w == img.width()) return img;
  return resize_to(img, h, w);
}

template <typename T>
basic_image<T> resize_backward(const basic_image<T>& grad_out, std::size_t src_h, std::size_t src_w,
                               double ratio) {
  const auto [h, w] = resized_shape(src_h, src_w, ratio);
  if (grad_out.height() != h || grad_out.width() != w)
    throw shape_error("resize_backward: gradient shape does not match resize output");
  if (h == src_h && w == src_w) return grad_out;
  return resize_to_backward(grad_out, src_h, src_w);
}

// ---------------------------------------------------------------------------
// SSIM: 11x11 Gaussian window (sigma 1.5), dynamic range 1, valid-region mean
// per channel, averaged over channels. Images narrower than the window use
// the largest odd window that fits.

namespace detail {

inline std::vector<double> ssim_window(std::size_t size, double sigma) {
  std::vector<double> w(size);
  const double c = static_cast<double>(size / 2);
  double s = 0;
  for (std::size_t i = 0; i < size; ++i) {
    const double d = static_cast<double>(i) - c;
    w[i] = std::exp(-d * d / (2 * sigma * sigma));
    s += w[i];
  }
  for (auto& v : w) v /= s;
  return w;
}

// Valid separable filtering of an h x w plane.
inline std::vector<double> filter_valid(const std::vector<double>& in, std::size_t h, std::size_t w,
                                        const std::vector<double>& win) {
  const std::size_t k = win.size();
  const std::size_t oh = h - k + 1, ow = w - k + 1;
  std::vector<double> tmp(h * ow), out(oh * ow);
  for (std::size_t y = 0; y < h; ++y)
    for (std::size_t x = 0; x < ow; ++x) {
      double s = 0;
      for (std::size_t t = 0; t < k; ++t) s += win[t] * in[y * w + x + t];
      tmp[y * ow + x] = s;
    }
  for (std::size_t y = 0; y < oh; ++y)
    for (std::size_t x = 0; x < ow; ++x) {
      double s = 0;
      for (std::size_t t = 0; t < k; ++t) s += win[t] * tmp[(y + t) * ow + x];
      out[y * ow + x] = s;
    }
  return out;
}

}  // namespace detail

template <typename T>
double ssim(const basic_image<T>& a, const basic_image<T>& b) {
  if (!a.same_shape(b)) throw shape_error("ssim: images differ in shape");
  constexpr double kC1 = 0.01 * 0.01;
  constexpr double kC2 = 0.03 * 0.03;
  std::size_t win_size = 11;
  const std::size_t smallest = std::min(a.height(), a.width());
  if (smallest < win_size) win_size = (smallest % 2 == 1) ? smallest : smallest - 1;
  const auto win = detail::ssim_window(win_size, 1.5);

  const std::size_t h = a.height(), w = a.width(), n = h * w;
  double total = 0;
  std::vector<double> pa(n), pb(n), paa(n), pbb(n), pab(n);
  for (std::size_t c = 0; c < kChannels; ++c) {
    for (std::size_t i = 0; i < n; ++i) {
      const double x = a.plane(c)[i], y = b.plane(c)[i];
      pa[i] = x;
      pb[i] = y;
      paa[i] = x * x;
      pbb[i] = y * y;
      pab[i] = x * y;
    }
    const auto mu_a = detail::filter_valid(pa, h, w, win);
    const auto mu_b = detail::filter_valid(pb, h, w, win);
    const auto e_aa = detail::filter_valid(paa, h, w, win);
    const auto e_bb = detail::filter_valid(pbb, h, w, win);
    const auto e_ab = detail::filter_valid(pab, h, w, win);
    double s = 0;
    for (std::size_t i = 0; i < mu_a.size(); ++i) {
      const double ma = mu_a[i], mb = mu_b[i];
      const double va = e_aa[i] - ma * ma;
      const double vb = e_bb[i] - mb * mb;
      const double cov = e_ab[i] - ma * mb;
      s += ((2 * ma * mb + kC1) * (2 * cov + kC2)) / ((ma * ma + mb * mb + kC1) * (va + vb + kC2));
    }
    total += s / static_cast<double>(mu_a.size());
  }
  return total / static_cast<double>(kChannels);
}

}  // namespace sfwm
