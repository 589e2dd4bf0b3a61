#pragma once

// Differentiable simplified JPEG: colour transform, 8x8 DCT, quantization and
// dequantization with a ratio surrogate gradient, inverse DCT, inverse colour
// transform. Entropy coding is omitted because it is lossless.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <numbers>
#include <string>
#include <vector>

#include "sfwm/common.hpp"
#include "sfwm/image.hpp"

namespace sfwm::jpeg {

using block8 = std::array<double, 64>;
using table8 = std::array<int, 64>;
using pixel3 = std::array<double, 3>;

struct quant_table {
  table8 luma;
  table8 chroma;
};

// Annex K reference tables (row-major).
inline constexpr table8 kBaseLuma = {
    16, 11, 10, 16, 24,  40,  51,  61,  12, 12, 14, 19, 26,  58,  60,  55,
    14, 13, 16, 24, 40,  57,  69,  56,  14, 17, 22, 29, 51,  87,  80,  62,
    18, 22, 37, 56, 68,  109, 103, 77,  24, 35, 55, 64, 81,  104, 113, 92,
    49, 64, 78, 87, 103, 121, 120, 101, 72, 92, 95, 98, 112, 100, 103, 99};

inline constexpr table8 kBaseChroma = {
    17, 18, 24, 47, 99, 99, 99, 99, 18, 21, 26, 66, 99, 99, 99, 99,
    24, 26, 56, 99, 99, 99, 99, 99, 47, 66, 99, 99, 99, 99, 99, 99,
    99, 99, 99, 99, 99, 99, 99, 99, 99, 99, 99, 99, 99, 99, 99, 99,
    99, 99, 99, 99, 99, 99, 99, 99, 99, 99, 99, 99, 99, 99, 99, 99};

inline quant_table base_tables() { return {kBaseLuma, kBaseChroma}; }

// libjpeg quality scaling.
inline quant_table scale_quant_table(const quant_table& base, int quality) {
  if (quality < 1 || quality > 100) throw parameter_error("JPEG quality must lie in [1, 100]");
  const long s = quality < 50 ? 5000 / quality : 200 - 2 * quality;
  auto scale = [s](const table8& t) {
    table8 out{};
    for (std::size_t i = 0; i < 64; ++i) {
      const long v = (static_cast<long>(t[i]) * s + 50) / 100;
      out[i] = static_cast<int>(std::clamp<long>(v, 1, 255));
    }
    return out;
  };
  return {scale(base.luma), scale(base.chroma)};
}

// ---------------------------------------------------------------------------
// Colour transform (full-range BT.601, values on the 0..255 scale).

inline constexpr std::array<std::array<double, 3>, 3> kRgbToYcc = {{
    {0.299, 0.587, 0.114},
    {-0.168736, -0.331264, 0.5},
    {0.5, -0.418688, -0.081312},
}};

inline constexpr std::array<std::array<double, 3>, 3> kYccToRgb = {{
    {1.0, 0.0, 1.402},
    {1.0, -0.344136, -0.714136},
    {1.0, 1.772, 0.0},
}};

inline pixel3 rgb_to_ycbcr(const pixel3& rgb) {
  pixel3 out{};
  for (std::size_t i = 0; i < 3; ++i)
    out[i] = kRgbToYcc[i][0] * rgb[0] + kRgbToYcc[i][1] * rgb[1] + kRgbToYcc[i][2] * rgb[2];
  out[1] += 128.0;
  out[2] += 128.0;
  return out;
}

inline pixel3 ycbcr_to_rgb(const pixel3& ycc) {
  const pixel3 c = {ycc[0], ycc[1] - 128.0, ycc[2] - 128.0};
  pixel3 out{};
  for (std::size_t i = 0; i < 3; ++i)
    out[i] = kYccToRgb[i][0] * c[0] + kYccToRgb[i][1] * c[1] + kYccToRgb[i][2] * c[2];
  return out;
}

// Image-level transforms. Input and output planes are on the 0..255 scale.
template <typename T>
basic_image<T> rgb_to_ycbcr(const basic_image<T>& img) {
  basic_image<T> out(img.height(), img.width());
  for (std::size_t i = 0; i < img.plane_size(); ++i) {
    const auto p = rgb_to_ycbcr(pixel3{img.plane(0)[i], img.plane(1)[i], img.plane(2)[i]});
    for (std::size_t c = 0; c < 3; ++c) out.plane(c)[i] = static_cast<T>(p[c]);
  }
  return out;
}

template <typename T>
basic_image<T> ycbcr_to_rgb(const basic_image<T>& img) {
  basic_image<T> out(img.height(), img.width());
  for (std::size_t i = 0; i < img.plane_size(); ++i) {
    const auto p = ycbcr_to_rgb(pixel3{img.plane(0)[i], img.plane(1)[i], img.plane(2)[i]});
    for (std::size_t c = 0; c < 3; ++c) out.plane(c)[i] = static_cast<T>(p[c]);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Orthonormal 8x8 DCT-II and its inverse.

namespace detail {

inline const std::array<double, 64>& dct_basis() {
  static const std::array<double, 64> basis = [] {
    std::array<double, 64> m{};
    for (std::size_t u = 0; u < 8; ++u) {
      const double a = u == 0 ? std::sqrt(1.0 / 8.0) : std::sqrt(2.0 / 8.0);
      for (std::size_t x = 0; x < 8; ++x)
        m[u * 8 + x] = a * std::cos((2.0 * static_cast<double>(x) + 1.0) * static_cast<double>(u) *
                                    std::numbers::pi / 16.0);
    }
    return m;
  }();
  return basis;
}

// out = A * in * A^T when forward, A^T * in * A otherwise.
inline block8 separable(const block8& in, bool forward) {
  const auto& a = dct_basis();
  block8 tmp{}, out{};
  for (std::size_t i = 0; i < 8; ++i)
    for (std::size_t j = 0; j < 8; ++j) {
      double s = 0;
      for (std::size_t k = 0; k < 8; ++k) s += (forward ? a[i * 8 + k] : a[k * 8 + i]) * in[k * 8 + j];
      tmp[i * 8 + j] = s;
    }
  for (std::size_t i = 0; i < 8; ++i)
    for (std::size_t j = 0; j < 8; ++j) {
      double s = 0;
      for (std::size_t k = 0; k < 8; ++k) s += tmp[i * 8 + k] * (forward ? a[j * 8 + k] : a[k * 8 + j]);
      out[i * 8 + j] = s;
    }
  return out;
}

}  // namespace detail

inline block8 dct8x8(const block8& block) { return detail::separable(block, true); }
inline block8 idct8x8(const block8& coeffs) { return detail::separable(coeffs, false); }

// ---------------------------------------------------------------------------
// Quantization followed by dequantization, in units of the quantization step.

struct quant_dequant_result {
  double value;  // forward output, an integer
  double grad;   // surrogate derivative: output / input, 0 at the origin
};

inline double fractional_part(double x) { return x - std::floor(x); }

inline quant_dequant_result quant_dequant(double x) {
  // x - x%1 is floor(x); evaluating it that way keeps g exactly integral.
  const double whole = std::floor(x);
  const double g = x - whole < 0.5 ? whole : whole + 1.0;
  const double k = x == 0.0 ? 0.0 : g / x;
  return {g, k};
}

// ---------------------------------------------------------------------------
// Full simplified codec.

enum class gradient_mode { surrogate, zero };

// Per-call record needed by the backward pass.
struct codec_trace {
  std::size_t height = 0, width = 0;
  std::size_t padded_height = 0, padded_width = 0;
  std::vector<double> ratio;  // surrogate factor per coefficient, padded planar layout
};

// Coefficients before quantization and after dequantization, per channel and
// block, in the padded block grid.
struct coefficient_dump {
  std::size_t padded_height = 0, padded_width = 0;
  int quality = 0;
  std::vector<block8> before;  // raw DCT coefficients
  std::vector<block8> after;   // table * quant_dequant(coefficient / table)
};

namespace detail {

inline std::size_t round_up8(std::size_t n) { return (n + 7) / 8 * 8; }

}  // namespace detail

template <typename T>
basic_image<T> simplified_jpeg(const basic_image<T>& img, int quality, codec_trace* trace = nullptr,
                               coefficient_dump* dump = nullptr) {
  const auto tables = scale_quant_table(base_tables(), quality);
  const std::size_t h = img.height(), w = img.width();
  const std::size_t ph = detail::round_up8(h), pw = detail::round_up8(w);
  const std::size_t np = ph * pw;

  // Edge-replicated padding, colour transform on the 0..255 scale.
  std::vector<double> ycc(3 * np);
  for (std::size_t y = 0; y < ph; ++y)
    for (std::size_t x = 0; x < pw; ++x) {
      const std::size_t sy = std::min(y, h - 1), sx = std::min(x, w - 1);
      const pixel3 rgb = {255.0 * img.at(0, sy, sx), 255.0 * img.at(1, sy, sx), 255.0 * img.at(2, sy, sx)};
      const auto p = rgb_to_ycbcr(rgb);
      for (std::size_t c = 0; c < 3; ++c) ycc[c * np + y * pw + x] = p[c];
    }

  if (trace) {
    trace->height = h;
    trace->width = w;
    trace->padded_height = ph;
    trace->padded_width = pw;
    trace->ratio.assign(3 * np, 0.0);
  }
  if (dump) {
    dump->padded_height = ph;
    dump->padded_width = pw;
    dump->quality = quality;
    dump->before.clear();
    dump->after.clear();
  }

  for (std::size_t c = 0; c < 3; ++c) {
    const table8& q = c == 0 ? tables.luma : tables.chroma;
    double* plane = ycc.data() + c * np;
    for (std::size_t by = 0; by < ph; by += 8)
      for (std::size_t bx = 0; bx < pw; bx += 8) {
        block8 blk{};
        for (std::size_t i = 0; i < 8; ++i)
          for (std::size_t j = 0; j < 8; ++j) blk[i * 8 + j] = plane[(by + i) * pw + bx + j] - 128.0;
        const block8 coef = dct8x8(blk);
        block8 deq{};
        for (std::size_t i = 0; i < 64; ++i) {
          const auto r = quant_dequant(coef[i] / q[i]);
          deq[i] = r.value * q[i];
          if (trace) trace->ratio[c * np + (by + i / 8) * pw + bx + i % 8] = r.grad;
        }
        if (dump) {
          dump->before.push_back(coef);
          dump->after.push_back(deq);
        }
        const block8 rec = idct8x8(deq);
        for (std::size_t i = 0; i < 8; ++i)
          for (std::size_t j = 0; j < 8; ++j) plane[(by + i) * pw + bx + j] = rec[i * 8 + j] + 128.0;
      }
  }

  basic_image<T> out(h, w);
  for (std::size_t y = 0; y < h; ++y)
    for (std::size_t x = 0; x < w; ++x) {
      const std::size_t i = y * pw + x;
      const auto rgb = ycbcr_to_rgb(pixel3{ycc[i], ycc[np + i], ycc[2 * np + i]});
      for (std::size_t c = 0; c < 3; ++c) out.at(c, y, x) = static_cast<T>(rgb[c] / 255.0);
    }
  return out;
}

// Gradient of simplified_jpeg with respect to its input. The linear stages
// contribute their exact transposes; the rounding contributes the recorded
// ratio. With gradient_mode::zero the codec blocks gradients entirely.
template <typename T>
basic_image<T> simplified_jpeg_backward(const basic_image<T>& grad_out, const codec_trace& trace,
                                        gradient_mode mode = gradient_mode::surrogate) {
  const std::size_t h = trace.height, w = trace.width, ph = trace.padded_height, pw = trace.padded_width;
  if (grad_out.height() != h || grad_out.width() != w)
    throw shape_error("simplified_jpeg_backward: gradient shape does not match trace");
  basic_image<T> result(h, w);
  if (mode == gradient_mode::zero) return result;
  const std::size_t np = ph * pw;

  // Inverse colour transform and /255, transposed.
  std::vector<double> g(3 * np, 0.0);
  for (std::size_t y = 0; y < h; ++y)
    for (std::size_t x = 0; x < w; ++x) {
      const std::size_t i = y * pw + x;
      for (std::size_t r = 0; r < 3; ++r) {
        const double go = grad_out.at(r, y, x) / 255.0;
        for (std::size_t c = 0; c < 3; ++c) g[c * np + i] += kYccToRgb[r][c] * go;
      }
    }

  // Per block: IDCT^T = DCT, then the surrogate ratio (the table division and
  // multiplication cancel), then DCT^T = IDCT.
  for (std::size_t c = 0; c < 3; ++c) {
    double* plane = g.data() + c * np;
    const double* ratio = trace.ratio.data() + c * np;
    for (std::size_t by = 0; by < ph; by += 8)
      for (std::size_t bx = 0; bx < pw; bx += 8) {
        block8 blk{};
        for (std::size_t i = 0; i < 8; ++i)
          for (std::size_t j = 0; j < 8; ++j) blk[i * 8 + j] = plane[(by + i) * pw + bx + j];
        block8 d = dct8x8(blk);
        for (std::size_t i = 0; i < 64; ++i) d[i] *= ratio[(by + i / 8) * pw + bx + i % 8];
        const block8 back = idct8x8(d);
        for (std::size_t i = 0; i < 8; ++i)
          for (std::size_t j = 0; j < 8; ++j) plane[(by + i) * pw + bx + j] = back[i * 8 + j];
      }
  }

  // Forward colour transform and *255, transposed; padding folds back onto
  // the replicated edge pixels.
  std::vector<double> acc(3 * h * w, 0.0);
  for (std::size_t y = 0; y < ph; ++y)
    for (std::size_t x = 0; x < pw; ++x) {
      const std::size_t sy = std::min(y, h - 1), sx = std::min(x, w - 1);
      const std::size_t i = y * pw + x;
      for (std::size_t r = 0; r < 3; ++r) {
        double s = 0;
        for (std::size_t c = 0; c < 3; ++c) s += kRgbToYcc[c][r] * g[c * np + i];
        acc[(r * h + sy) * w + sx] += 255.0 * s;
      }
    }
  std::transform(acc.begin(), acc.end(), result.data().begin(), [](double v) { return static_cast<T>(v); });
  return result;
}

// Binary conformance dump, all integers and floats little-endian:
//   "SFWMJPGD" | u32 version=1 | u32 padded_height | u32 padded_width |
//   u32 quality | u32 block_count (per channel)
//   then for channel in (Y, Cb, Cr), for block in row-major block order:
//     64 x f32 coefficients before quantization (row-major 8x8)
//     64 x f32 coefficients after dequantization (row-major 8x8)
inline void write_coefficient_dump(const coefficient_dump& dump, const std::string& path) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw format_error("cannot open " + path + " for writing");
  auto put_u32 = [&](std::uint32_t v) {
    const unsigned char b[4] = {static_cast<unsigned char>(v), static_cast<unsigned char>(v >> 8),
                                static_cast<unsigned char>(v >> 16), static_cast<unsigned char>(v >> 24)};
    os.write(reinterpret_cast<const char*>(b), 4);
  };
  auto put_f32 = [&](double d) {
    const float f = static_cast<float>(d);
    std::uint32_t bits;
    std::memcpy(&bits, &f, 4);
    put_u32(bits);
  };
  os.write("SFWMJPGD", 8);
  put_u32(1);
  put_u32(static_cast<std::uint32_t>(dump.padded_height));
  put_u32(static_cast<std::uint32_t>(dump.padded_width));
  put_u32(static_cast<std::uint32_t>(dump.quality));
  const std::size_t per_channel = dump.before.size() / 3;
  put_u32(static_cast<std::uint32_t>(per_channel));
  for (std::size_t b = 0; b < dump.before.size(); ++b) {
    for (double v : dump.before[b]) put_f32(v);
    for (double v : dump.after[b]) put_f32(v);
  }
  if (!os) throw format_error("failed writing " + path);
}

}  // namespace sfwm::jpeg
