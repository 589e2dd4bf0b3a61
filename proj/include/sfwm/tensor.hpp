#pragma once

#include <cblas.h>

#include <algorithm>
#include <cstddef>
#include <cstdlib>
#include <string>
#include <vector>

#include "sfwm/common.hpp"
#include "sfwm/image.hpp"

namespace sfwm {

// Row-major C = alpha * op(A) * op(B) + beta * C.
inline void gemm(bool ta, bool tb, std::size_t m, std::size_t n, std::size_t k, float alpha,
                 const float* a, std::size_t lda, const float* b, std::size_t ldb, float beta, float* c,
                 std::size_t ldc) {
  cblas_sgemm(CblasRowMajor, ta ? CblasTrans : CblasNoTrans, tb ? CblasTrans : CblasNoTrans,
              static_cast<int>(m), static_cast<int>(n), static_cast<int>(k), alpha, a, static_cast<int>(lda),
              b, static_cast<int>(ldb), beta, c, static_cast<int>(ldc));
}

inline void gemm(bool ta, bool tb, std::size_t m, std::size_t n, std::size_t k, double alpha,
                 const double* a, std::size_t lda, const double* b, std::size_t ldb, double beta,
                 double* c, std::size_t ldc) {
  cblas_dgemm(CblasRowMajor, ta ? CblasTrans : CblasNoTrans, tb ? CblasTrans : CblasNoTrans,
              static_cast<int>(m), static_cast<int>(n), static_cast<int>(k), alpha, a, static_cast<int>(lda),
              b, static_cast<int>(ldb), beta, c, static_cast<int>(ldc));
}

// Honors SFWM_NUM_THREADS; defaults to a single BLAS thread so that runs are
// bit-reproducible.
inline void configure_threads() {
  int n = 1;
  if (const char* env = std::getenv("SFWM_NUM_THREADS")) n = std::max(1, std::atoi(env));
  openblas_set_num_threads(n);
}

// Activation tensor in channel-major layout: index ((c * batch + n) * H + y) * W + x.
// Keeping channels outermost lets a whole mini-batch go through one GEMM per
// convolution without transposes.
template <typename T>
struct feature_map {
  std::size_t channels = 0, batch = 0, height = 0, width = 0;
  std::vector<T> data;

  feature_map() = default;
  feature_map(std::size_t c, std::size_t n, std::size_t h, std::size_t w, T fill = T(0))
      : channels(c), batch(n), height(h), width(w), data(c * n * h * w, fill) {}

  std::size_t plane() const noexcept { return height * width; }
  std::size_t spatial() const noexcept { return batch * height * width; }
  std::size_t size() const noexcept { return data.size(); }

  T* channel(std::size_t c) { return data.data() + c * spatial(); }
  const T* channel(std::size_t c) const { return data.data() + c * spatial(); }
  T* slice(std::size_t c, std::size_t n) { return data.data() + (c * batch + n) * plane(); }
  const T* slice(std::size_t c, std::size_t n) const { return data.data() + (c * batch + n) * plane(); }

  bool same_shape(const feature_map& o) const noexcept {
    return channels == o.channels && batch == o.batch && height == o.height && width == o.width;
  }
};

template <typename T>
feature_map<T> from_images(const std::vector<basic_image<T>>& images) {
  if (images.empty()) throw shape_error("empty image batch");
  const std::size_t h = images.front().height(), w = images.front().width();
  feature_map<T> fm(kChannels, images.size(), h, w);
  for (std::size_t n = 0; n < images.size(); ++n) {
    if (images[n].height() != h || images[n].width() != w)
      throw shape_error("images in a batch must share dimensions");
    for (std::size_t c = 0; c < kChannels; ++c)
      std::copy_n(images[n].plane(c), fm.plane(), fm.slice(c, n));
  }
  return fm;
}

template <typename T>
std::vector<basic_image<T>> to_images(const feature_map<T>& fm) {
  if (fm.channels != kChannels) throw shape_error("to_images expects 3 channels");
  std::vector<basic_image<T>> out;
  out.reserve(fm.batch);
  for (std::size_t n = 0; n < fm.batch; ++n) {
    basic_image<T> img(fm.height, fm.width);
    for (std::size_t c = 0; c < kChannels; ++c) std::copy_n(fm.slice(c, n), fm.plane(), img.plane(c));
    out.push_back(std::move(img));
  }
  return out;
}

}  // namespace sfwm
