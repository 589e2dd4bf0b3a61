#pragma once

// 8-bit RGB PNG and binary PPM (P6) reading and writing.

#include <png.h>

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <string>
#include <vector>

#include "sfwm/common.hpp"
#include "sfwm/image.hpp"
#include "sfwm/io.hpp"

namespace sfwm {

namespace detail {

inline image from_rgb8(const unsigned char* rgb, std::size_t h, std::size_t w) {
  image img(h, w);
  for (std::size_t y = 0; y < h; ++y)
    for (std::size_t x = 0; x < w; ++x)
      for (std::size_t c = 0; c < 3; ++c) img.at(c, y, x) = rgb[(y * w + x) * 3 + c] / 255.0f;
  return img;
}

inline std::vector<unsigned char> to_rgb8(const image& img) {
  std::vector<unsigned char> out(img.height() * img.width() * 3);
  for (std::size_t y = 0; y < img.height(); ++y)
    for (std::size_t x = 0; x < img.width(); ++x)
      for (std::size_t c = 0; c < 3; ++c) {
        const float v = std::clamp(img.at(c, y, x), 0.0f, 1.0f);
        out[(y * img.width() + x) * 3 + c] = static_cast<unsigned char>(std::floor(v * 255.0f + 0.5f));
      }
  return out;
}

inline bool has_suffix(const std::string& path, const char* ext) {
  auto e = std::filesystem::path(path).extension().string();
  for (auto& ch : e) ch = static_cast<char>(std::tolower(static_cast<unsigned char>(ch)));
  return e == ext;
}

}  // namespace detail

inline image decode_png(const std::string& bytes) {
  png_image pi{};
  pi.version = PNG_IMAGE_VERSION;
  if (!png_image_begin_read_from_memory(&pi, bytes.data(), bytes.size()))
    throw format_error(std::string("not a readable PNG: ") + pi.message);
  pi.format = PNG_FORMAT_RGB;
  std::vector<unsigned char> buf(PNG_IMAGE_SIZE(pi));
  if (!png_image_finish_read(&pi, nullptr, buf.data(), 0, nullptr)) {
    png_image_free(&pi);
    throw format_error(std::string("PNG decode failed: ") + pi.message);
  }
  if (pi.height < kMinImageSide || pi.width < kMinImageSide) throw shape_error("image smaller than 8x8");
  return detail::from_rgb8(buf.data(), pi.height, pi.width);
}

inline std::string encode_png(const image& img) {
  const auto rgb = detail::to_rgb8(img);
  png_image pi{};
  pi.version = PNG_IMAGE_VERSION;
  pi.width = static_cast<png_uint_32>(img.width());
  pi.height = static_cast<png_uint_32>(img.height());
  pi.format = PNG_FORMAT_RGB;
  png_alloc_size_t size = 0;
  if (!png_image_write_to_memory(&pi, nullptr, &size, 0, rgb.data(), 0, nullptr))
    throw format_error(std::string("PNG encode failed: ") + pi.message);
  std::string out(size, '\0');
  if (!png_image_write_to_memory(&pi, out.data(), &size, 0, rgb.data(), 0, nullptr))
    throw format_error(std::string("PNG encode failed: ") + pi.message);
  out.resize(size);
  return out;
}

inline image decode_ppm(const std::string& bytes) {
  std::size_t pos = 0;
  auto token = [&]() {
    for (;;) {
      while (pos < bytes.size() && std::isspace(static_cast<unsigned char>(bytes[pos]))) ++pos;
      if (pos < bytes.size() && bytes[pos] == '#')
        while (pos < bytes.size() && bytes[pos] != '\n') ++pos;
      else
        break;
    }
    const std::size_t start = pos;
    while (pos < bytes.size() && !std::isspace(static_cast<unsigned char>(bytes[pos]))) ++pos;
    return bytes.substr(start, pos - start);
  };
  if (token() != "P6") throw format_error("not a binary PPM (P6)");
  std::size_t w = 0, h = 0, maxval = 0;
  try {
    w = std::stoul(token());
    h = std::stoul(token());
    maxval = std::stoul(token());
  } catch (const std::exception&) {
    throw format_error("malformed PPM header");
  }
  if (maxval != 255) throw format_error("only 8-bit PPM is supported");
  ++pos;  // single whitespace before the raster
  if (bytes.size() < pos + w * h * 3) throw format_error("truncated PPM raster");
  if (h < kMinImageSide || w < kMinImageSide) throw shape_error("image smaller than 8x8");
  return detail::from_rgb8(reinterpret_cast<const unsigned char*>(bytes.data() + pos), h, w);
}

inline std::string encode_ppm(const image& img) {
  const auto rgb = detail::to_rgb8(img);
  std::string out = "P6\n" + std::to_string(img.width()) + " " + std::to_string(img.height()) + "\n255\n";
  out.append(reinterpret_cast<const char*>(rgb.data()), rgb.size());
  return out;
}

// Format chosen by content magic.
inline image load_image(const std::string& path) {
  const auto bytes = io::read_file(path);
  if (bytes.size() >= 8 && png_sig_cmp(reinterpret_cast<png_const_bytep>(bytes.data()), 0, 8) == 0)
    return decode_png(bytes);
  if (bytes.size() >= 2 && bytes[0] == 'P' && bytes[1] == '6') return decode_ppm(bytes);
  throw format_error("unrecognized image format: " + path);
}

// Format chosen by extension (.ppm, anything else PNG).
inline void save_image(const std::string& path, const image& img) {
  io::atomic_write(path, detail::has_suffix(path, ".ppm") ? encode_ppm(img) : encode_png(img));
}

}  // namespace sfwm
