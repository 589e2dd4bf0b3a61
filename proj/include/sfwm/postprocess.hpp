#pragma once

// The post-processing module placed between encoder and decoder.

#include <array>
#include <cstdio>
#include <string>
#include <vector>

#include "sfwm/common.hpp"
#include "sfwm/image.hpp"
#include "sfwm/imageops.hpp"
#include "sfwm/jpeg.hpp"

namespace sfwm {

// Scheduler states are the operation families, in this order.
enum class op_kind { identity = 0, jpeg = 1, blur = 2, crop = 3, resize = 4 };
inline constexpr std::size_t kOpFamilies = 5;

inline const char* op_name(op_kind k) {
  switch (k) {
    case op_kind::identity: return "identity";
    case op_kind::jpeg: return "jpeg";
    case op_kind::blur: return "blur";
    case op_kind::crop: return "crop";
    case op_kind::resize: return "resize";
  }
  return "?";
}

struct post_process_op {
  op_kind kind = op_kind::identity;
  double param = 0.0;  // quality, variance, crop size or resize ratio

  static post_process_op identity() { return {op_kind::identity, 0.0}; }
  static post_process_op jpeg(int quality) { return {op_kind::jpeg, static_cast<double>(quality)}; }
  static post_process_op blur(double variance) { return {op_kind::blur, variance}; }
  static post_process_op crop(double size) { return {op_kind::crop, size}; }
  static post_process_op resize(double ratio) { return {op_kind::resize, ratio}; }

  int quality() const { return static_cast<int>(param + 0.5); }

  std::string label() const {
    if (kind == op_kind::identity) return "identity";
    char buf[64];
    if (kind == op_kind::jpeg)
      std::snprintf(buf, sizeof buf, "jpeg(%d)", quality());
    else
      std::snprintf(buf, sizeof buf, "%s(%.1f)", op_name(kind), param);
    return buf;
  }

  bool operator==(const post_process_op&) const = default;
};

// Training/evaluation grid for one family.
inline std::vector<post_process_op> parameter_grid(op_kind kind) {
  std::vector<post_process_op> g;
  switch (kind) {
    case op_kind::identity:
      g.push_back(post_process_op::identity());
      break;
    case op_kind::jpeg:
      for (int q = 10; q <= 100; q += 10) g.push_back(post_process_op::jpeg(q));
      break;
    case op_kind::blur:
      for (int i = 0; i <= 10; ++i) g.push_back(post_process_op::blur(i / 10.0));
      break;
    case op_kind::crop:
      for (int i = 6; i <= 10; ++i) g.push_back(post_process_op::crop(i / 10.0));
      break;
    case op_kind::resize:
      for (int i = 3; i <= 10; ++i) g.push_back(post_process_op::resize(i / 10.0));
      break;
  }
  return g;
}

// Every non-identity grid point: 10 + 11 + 5 + 8 = 34 operations.
inline std::vector<post_process_op> full_grid() {
  std::vector<post_process_op> g;
  for (auto k : {op_kind::jpeg, op_kind::blur, op_kind::crop, op_kind::resize})
    for (const auto& op : parameter_grid(k)) g.push_back(op);
  return g;
}

inline post_process_op sample_op(op_kind kind, rng_t& rng) {
  const auto g = parameter_grid(kind);
  return g[uniform_index(rng, g.size())];
}

template <typename T>
basic_image<T> apply_post_process(const basic_image<T>& img, const post_process_op& op) {
  switch (op.kind) {
    case op_kind::identity: return img;
    case op_kind::jpeg: return jpeg::simplified_jpeg(img, op.quality());
    case op_kind::blur: return gaussian_blur(img, op.param);
    case op_kind::crop: return crop(img, op.param);
    case op_kind::resize: return resize(img, op.param);
  }
  throw parameter_error("unknown post-processing operation");
}

// Differentiable application over a batch; remembers what backward needs.
template <typename T>
class post_process_stage {
 public:
  std::vector<basic_image<T>> forward(const std::vector<basic_image<T>>& batch, const post_process_op& op) {
    op_ = op;
    traces_.assign(batch.size(), {});
    shapes_.clear();
    std::vector<basic_image<T>> out;
    out.reserve(batch.size());
    for (std::size_t i = 0; i < batch.size(); ++i) {
      shapes_.emplace_back(batch[i].height(), batch[i].width());
      if (op.kind == op_kind::jpeg)
        out.push_back(jpeg::simplified_jpeg(batch[i], op.quality(), &traces_[i]));
      else
        out.push_back(apply_post_process(batch[i], op));
    }
    return out;
  }

  std::vector<basic_image<T>> backward(const std::vector<basic_image<T>>& grads,
                                       jpeg::gradient_mode mode = jpeg::gradient_mode::surrogate) const {
    std::vector<basic_image<T>> out;
    out.reserve(grads.size());
    for (std::size_t i = 0; i < grads.size(); ++i) {
      const auto [h, w] = shapes_[i];
      switch (op_.kind) {
        case op_kind::identity: out.push_back(grads[i]); break;
        case op_kind::jpeg: out.push_back(jpeg::simplified_jpeg_backward(grads[i], traces_[i], mode)); break;
        case op_kind::blur: out.push_back(gaussian_blur_backward(grads[i], op_.param)); break;
        case op_kind::crop: out.push_back(crop_backward(grads[i], h, w, op_.param)); break;
        case op_kind::resize: out.push_back(resize_backward(grads[i], h, w, op_.param)); break;
      }
    }
    return out;
  }

  const post_process_op& op() const noexcept { return op_; }

 private:
  post_process_op op_;
  std::vector<jpeg::codec_trace> traces_;
  std::vector<std::pair<std::size_t, std::size_t>> shapes_;
};

}  // namespace sfwm
