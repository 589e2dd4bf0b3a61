#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <vector>

#include "sfwm/common.hpp"

namespace sfwm {

inline constexpr std::size_t kChannels = 3;
inline constexpr std::size_t kMinImageSide = 8;

// RGB image stored as three planes (channel-major). Values live in [0,1]
// when persisted; differentiable pipelines may push them outside.
template <typename T>
class basic_image {
 public:
  using value_type = T;

  basic_image() = default;

  basic_image(std::size_t height, std::size_t width, T fill = T(0))
      : height_(height), width_(width), data_(kChannels * height * width, fill) {
    if (height < kMinImageSide || width < kMinImageSide)
      throw shape_error("image must be at least 8x8, got " + std::to_string(height) + "x" +
                        std::to_string(width));
  }

  basic_image(std::size_t height, std::size_t width, std::vector<T> data)
      : height_(height), width_(width), data_(std::move(data)) {
    if (height < kMinImageSide || width < kMinImageSide)
      throw shape_error("image must be at least 8x8, got " + std::to_string(height) + "x" +
                        std::to_string(width));
    if (data_.size() != kChannels * height * width)
      throw shape_error("image data length does not match 3*H*W");
  }

  std::size_t height() const noexcept { return height_; }
  std::size_t width() const noexcept { return width_; }
  std::size_t plane_size() const noexcept { return height_ * width_; }
  std::size_t size() const noexcept { return data_.size(); }
  bool empty() const noexcept { return data_.empty(); }

  T& at(std::size_t c, std::size_t y, std::size_t x) { return data_[(c * height_ + y) * width_ + x]; }
  const T& at(std::size_t c, std::size_t y, std::size_t x) const {
    return data_[(c * height_ + y) * width_ + x];
  }

  T* plane(std::size_t c) { return data_.data() + c * plane_size(); }
  const T* plane(std::size_t c) const { return data_.data() + c * plane_size(); }

  std::vector<T>& data() noexcept { return data_; }
  const std::vector<T>& data() const noexcept { return data_; }

  bool same_shape(const basic_image& o) const noexcept {
    return height_ == o.height_ && width_ == o.width_;
  }

  template <typename U>
  basic_image<U> cast() const {
    basic_image<U> out(height_, width_);
    std::transform(data_.begin(), data_.end(), out.data().begin(),
                   [](T v) { return static_cast<U>(v); });
    return out;
  }

 private:
  std::size_t height_ = 0;
  std::size_t width_ = 0;
  std::vector<T> data_;
};

using image = basic_image<float>;

template <typename T>
basic_image<T> clamp01(basic_image<T> img) {
  for (auto& v : img.data()) v = std::clamp(v, T(0), T(1));
  return img;
}

// Clamp, then quantize to 8-bit levels (round half up) and map back to [0,1].
// This is exactly what a save/load cycle through PNG does to an image.
template <typename T>
basic_image<T> quantize8(basic_image<T> img) {
  for (auto& v : img.data()) {
    const double b = std::floor(std::clamp<double>(v, 0.0, 1.0) * 255.0 + 0.5);
    v = static_cast<T>(b / 255.0);
  }
  return img;
}

template <typename T>
double max_abs_diff(const basic_image<T>& a, const basic_image<T>& b) {
  if (!a.same_shape(b)) throw shape_error("max_abs_diff: shape mismatch");
  double m = 0;
  for (std::size_t i = 0; i < a.size(); ++i)
    m = std::max(m, std::abs(static_cast<double>(a.data()[i]) - static_cast<double>(b.data()[i])));
  return m;
}

template <typename T>
double mean_abs_diff(const basic_image<T>& a, const basic_image<T>& b) {
  if (!a.same_shape(b)) throw shape_error("mean_abs_diff: shape mismatch");
  double s = 0;
  for (std::size_t i = 0; i < a.size(); ++i)
    s += std::abs(static_cast<double>(a.data()[i]) - static_cast<double>(b.data()[i]));
  return s / static_cast<double>(a.size());
}

}  // namespace sfwm
