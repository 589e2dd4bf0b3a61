#pragma once

// Network building blocks with explicit forward/backward passes over
// channel-major feature maps, and the Adam optimizer.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include "sfwm/common.hpp"
#include "sfwm/tensor.hpp"

namespace sfwm::nn {

enum class phase {
  train,         // batch statistics, running averages updated
  train_frozen,  // batch statistics, running averages untouched
  eval,          // running averages
};

// A named array owned by a layer. Trainable tensors carry a gradient buffer.
template <typename T>
struct tensor_slot {
  std::string name;
  std::vector<std::size_t> shape;
  std::vector<T>* value;
  std::vector<T>* grad;  // nullptr for non-trainable buffers
};

template <typename T>
void append_slots(std::vector<tensor_slot<T>>& out, const std::string& prefix,
                  std::vector<tensor_slot<T>> slots) {
  for (auto& s : slots) {
    s.name = prefix + "." + s.name;
    out.push_back(std::move(s));
  }
}

// Scratch cap for im2col buffers, in elements.
inline constexpr std::size_t kColumnBudget = std::size_t(1) << 22;

template <typename T>
class conv2d {
 public:
  conv2d() = default;
  conv2d(std::size_t in_channels, std::size_t out_channels, std::size_t kernel, std::size_t padding)
      : in_(in_channels),
        out_(out_channels),
        k_(kernel),
        pad_(padding),
        weight_(out_channels * in_channels * kernel * kernel),
        bias_(out_channels),
        dweight_(weight_.size()),
        dbias_(out_channels) {}

  std::size_t in_channels() const noexcept { return in_; }
  std::size_t out_channels() const noexcept { return out_; }
  std::size_t kernel() const noexcept { return k_; }
  std::size_t padding() const noexcept { return pad_; }
  std::size_t stride() const noexcept { return 1; }
  std::size_t fan_in() const noexcept { return in_ * k_ * k_; }

  std::vector<T>& weight() noexcept { return weight_; }
  const std::vector<T>& weight() const noexcept { return weight_; }
  std::vector<T>& bias() noexcept { return bias_; }
  const std::vector<T>& bias() const noexcept { return bias_; }

  std::vector<tensor_slot<T>> slots() {
    return {{"weight", {out_, in_, k_, k_}, &weight_, &dweight_}, {"bias", {out_}, &bias_, &dbias_}};
  }

  // Output spatial size equals input size (stride 1, "same" padding).
  feature_map<T> forward(const feature_map<T>& x) const {
    check_input(x);
    feature_map<T> y(out_, x.batch, x.height, x.width);
    if (k_ == 3 && pad_ == 1)
      forward3x3(x, y);
    else if (k_ == 1 && pad_ == 0)
      gemm(false, false, out_, x.spatial(), in_, T(1), weight_.data(), in_, x.data.data(), x.spatial(), T(0),
           y.data.data(), x.spatial());
    else
      forward_im2col(x, y);
    const std::size_t total = x.spatial();
    for (std::size_t o = 0; o < out_; ++o) {
      T* p = y.channel(o);
      for (std::size_t i = 0; i < total; ++i) p[i] += bias_[o];
    }
    return y;
  }

  // Accumulates parameter gradients; returns the input gradient when wanted.
  feature_map<T> backward(const feature_map<T>& x, const feature_map<T>& dy, bool want_input_grad) {
    const std::size_t total = x.spatial();
    for (std::size_t o = 0; o < out_; ++o) {
      const T* g = dy.channel(o);
      double s = 0;
      for (std::size_t i = 0; i < total; ++i) s += g[i];
      dbias_[o] += static_cast<T>(s);
    }
    feature_map<T> dx;
    if (want_input_grad) dx = feature_map<T>(in_, x.batch, x.height, x.width);
    if (k_ == 3 && pad_ == 1) {
      backward3x3(x, dy, want_input_grad ? &dx : nullptr);
    } else if (k_ == 1 && pad_ == 0) {
      gemm(false, true, out_, in_, total, T(1), dy.data.data(), total, x.data.data(), total, T(1),
           dweight_.data(), in_);
      if (want_input_grad)
        gemm(true, false, in_, total, out_, T(1), weight_.data(), in_, dy.data.data(), total, T(0), dx.data.data(),
             total);
    } else {
      backward_im2col(x, dy, want_input_grad ? &dx : nullptr);
    }
    return dx;
  }

 private:
  void check_input(const feature_map<T>& x) const {
    if (x.channels != in_)
      throw shape_error("conv2d expects " + std::to_string(in_) + " input channels, got " +
                        std::to_string(x.channels));
  }

  // Copies one plane into a zero border of width 1.
  static void pad_plane(const T* src, std::size_t h, std::size_t w, std::vector<T>& dst) {
    dst.assign((h + 2) * (w + 2), T(0));
    for (std::size_t y = 0; y < h; ++y) std::copy_n(src + y * w, w, dst.data() + (y + 1) * (w + 2) + 1);
  }

  void forward3x3(const feature_map<T>& x, feature_map<T>& y) const {
    const std::size_t h = x.height, w = x.width, pw = w + 2;
    std::vector<T> padded;
    for (std::size_t n = 0; n < x.batch; ++n)
      for (std::size_t ci = 0; ci < in_; ++ci) {
        pad_plane(x.slice(ci, n), h, w, padded);
        for (std::size_t co = 0; co < out_; ++co) {
          T* o = y.slice(co, n);
          const T* k = weight_.data() + (co * in_ + ci) * 9;
          const T k0 = k[0], k1 = k[1], k2 = k[2], k3 = k[3], k4 = k[4], k5 = k[5], k6 = k[6], k7 = k[7], k8 = k[8];
          for (std::size_t r = 0; r < h; ++r) {
            T* __restrict orow = o + r * w;
            const T* __restrict r0 = padded.data() + r * pw;
            const T* __restrict r1 = r0 + pw;
            const T* __restrict r2 = r1 + pw;
            for (std::size_t c = 0; c < w; ++c)
              orow[c] += k0 * r0[c] + k1 * r0[c + 1] + k2 * r0[c + 2] + k3 * r1[c] + k4 * r1[c + 1] +
                         k5 * r1[c + 2] + k6 * r2[c] + k7 * r2[c + 1] + k8 * r2[c + 2];
          }
        }
      }
  }

  void backward3x3(const feature_map<T>& x, const feature_map<T>& dy, feature_map<T>* dx) {
    const std::size_t h = x.height, w = x.width, pw = w + 2;
    std::vector<T> padded;
    // Weight gradient: correlation of the padded input with the output gradient.
    for (std::size_t n = 0; n < x.batch; ++n)
      for (std::size_t ci = 0; ci < in_; ++ci) {
        pad_plane(x.slice(ci, n), h, w, padded);
        for (std::size_t co = 0; co < out_; ++co) {
          const T* g = dy.slice(co, n);
          T a0 = 0, a1 = 0, a2 = 0, a3 = 0, a4 = 0, a5 = 0, a6 = 0, a7 = 0, a8 = 0;
          for (std::size_t r = 0; r < h; ++r) {
            const T* __restrict grow = g + r * w;
            const T* __restrict r0 = padded.data() + r * pw;
            const T* __restrict r1 = r0 + pw;
            const T* __restrict r2 = r1 + pw;
#pragma omp simd reduction(+ : a0, a1, a2, a3, a4, a5, a6, a7, a8)
            for (std::size_t c = 0; c < w; ++c) {
              const T gv = grow[c];
              a0 += gv * r0[c];
              a1 += gv * r0[c + 1];
              a2 += gv * r0[c + 2];
              a3 += gv * r1[c];
              a4 += gv * r1[c + 1];
              a5 += gv * r1[c + 2];
              a6 += gv * r2[c];
              a7 += gv * r2[c + 1];
              a8 += gv * r2[c + 2];
            }
          }
          T* dk = dweight_.data() + (co * in_ + ci) * 9;
          dk[0] += a0; dk[1] += a1; dk[2] += a2;
          dk[3] += a3; dk[4] += a4; dk[5] += a5;
          dk[6] += a6; dk[7] += a7; dk[8] += a8;
        }
      }
    if (!dx) return;
    // Input gradient: the padded output gradient correlated with the
    // 180-degree rotated kernel.
    for (std::size_t n = 0; n < x.batch; ++n)
      for (std::size_t co = 0; co < out_; ++co) {
        pad_plane(dy.slice(co, n), h, w, padded);
        for (std::size_t ci = 0; ci < in_; ++ci) {
          T* d = dx->slice(ci, n);
          const T* k = weight_.data() + (co * in_ + ci) * 9;
          const T k0 = k[8], k1 = k[7], k2 = k[6], k3 = k[5], k4 = k[4], k5 = k[3], k6 = k[2], k7 = k[1], k8 = k[0];
          for (std::size_t r = 0; r < h; ++r) {
            T* __restrict drow = d + r * w;
            const T* __restrict r0 = padded.data() + r * pw;
            const T* __restrict r1 = r0 + pw;
            const T* __restrict r2 = r1 + pw;
            for (std::size_t c = 0; c < w; ++c)
              drow[c] += k0 * r0[c] + k1 * r0[c + 1] + k2 * r0[c + 2] + k3 * r1[c] + k4 * r1[c + 1] +
                         k5 * r1[c + 2] + k6 * r2[c] + k7 * r2[c + 1] + k8 * r2[c + 2];
          }
        }
      }
  }

  void forward_im2col(const feature_map<T>& x, feature_map<T>& y) const {
    const std::size_t hw = x.plane(), kk = fan_in(), total = x.spatial();
    const std::size_t chunk = chunk_images(x);
    std::vector<T> col;
    for (std::size_t n0 = 0; n0 < x.batch; n0 += chunk) {
      const std::size_t nb = std::min(chunk, x.batch - n0);
      im2col(x, n0, nb, col);
      gemm(false, false, out_, nb * hw, kk, T(1), weight_.data(), kk, col.data(), nb * hw, T(0),
           y.data.data() + n0 * hw, total);
    }
  }

  void backward_im2col(const feature_map<T>& x, const feature_map<T>& dy, feature_map<T>* dx) {
    const std::size_t hw = x.plane(), kk = fan_in(), total = x.spatial();
    const std::size_t chunk = chunk_images(x);
    std::vector<T> col, dcol;
    for (std::size_t n0 = 0; n0 < x.batch; n0 += chunk) {
      const std::size_t nb = std::min(chunk, x.batch - n0);
      im2col(x, n0, nb, col);
      gemm(false, true, out_, kk, nb * hw, T(1), dy.data.data() + n0 * hw, total, col.data(), nb * hw, T(1),
           dweight_.data(), kk);
      if (dx) {
        dcol.assign(kk * nb * hw, T(0));
        gemm(true, false, kk, nb * hw, out_, T(1), weight_.data(), kk, dy.data.data() + n0 * hw, total, T(0),
             dcol.data(), nb * hw);
        col2im(dcol, n0, nb, *dx);
      }
    }
  }

  std::size_t chunk_images(const feature_map<T>& x) const {
    const std::size_t per_image = fan_in() * x.plane();
    return std::max<std::size_t>(1, std::min(x.batch, kColumnBudget / std::max<std::size_t>(1, per_image)));
  }

  // Columns for images [n0, n0 + nb): row r = (c, ky, kx), column = local pixel.
  void im2col(const feature_map<T>& x, std::size_t n0, std::size_t nb, std::vector<T>& col) const {
    const std::size_t h = x.height, w = x.width, hw = h * w, cols = nb * hw;
    col.assign(fan_in() * cols, T(0));
    const auto pad = static_cast<std::ptrdiff_t>(pad_);
    for (std::size_t c = 0; c < in_; ++c)
      for (std::size_t ky = 0; ky < k_; ++ky)
        for (std::size_t kx = 0; kx < k_; ++kx) {
          T* row = col.data() + ((c * k_ + ky) * k_ + kx) * cols;
          const std::ptrdiff_t dy = static_cast<std::ptrdiff_t>(ky) - pad;
          const std::ptrdiff_t dx = static_cast<std::ptrdiff_t>(kx) - pad;
          const std::size_t x0 = static_cast<std::size_t>(std::max<std::ptrdiff_t>(0, -dx));
          const std::size_t x1 = static_cast<std::size_t>(
              std::min<std::ptrdiff_t>(static_cast<std::ptrdiff_t>(w), static_cast<std::ptrdiff_t>(w) - dx));
          for (std::size_t n = 0; n < nb; ++n) {
            const T* src = x.slice(c, n0 + n);
            for (std::size_t y = 0; y < h; ++y) {
              const std::ptrdiff_t sy = static_cast<std::ptrdiff_t>(y) + dy;
              if (sy < 0 || sy >= static_cast<std::ptrdiff_t>(h)) continue;
              T* dst = row + n * hw + y * w;
              const T* s = src + static_cast<std::size_t>(sy) * w;
              for (std::size_t xx = x0; xx < x1; ++xx)
                dst[xx] = s[static_cast<std::size_t>(static_cast<std::ptrdiff_t>(xx) + dx)];
            }
          }
        }
  }

  void col2im(const std::vector<T>& col, std::size_t n0, std::size_t nb, feature_map<T>& dx) const {
    const std::size_t h = dx.height, w = dx.width, hw = h * w, cols = nb * hw;
    const auto pad = static_cast<std::ptrdiff_t>(pad_);
    for (std::size_t c = 0; c < in_; ++c)
      for (std::size_t ky = 0; ky < k_; ++ky)
        for (std::size_t kx = 0; kx < k_; ++kx) {
          const T* row = col.data() + ((c * k_ + ky) * k_ + kx) * cols;
          const std::ptrdiff_t oy = static_cast<std::ptrdiff_t>(ky) - pad;
          const std::ptrdiff_t ox = static_cast<std::ptrdiff_t>(kx) - pad;
          const std::size_t x0 = static_cast<std::size_t>(std::max<std::ptrdiff_t>(0, -ox));
          const std::size_t x1 = static_cast<std::size_t>(
              std::min<std::ptrdiff_t>(static_cast<std::ptrdiff_t>(w), static_cast<std::ptrdiff_t>(w) - ox));
          for (std::size_t n = 0; n < nb; ++n) {
            T* dst = dx.slice(c, n0 + n);
            for (std::size_t y = 0; y < h; ++y) {
              const std::ptrdiff_t sy = static_cast<std::ptrdiff_t>(y) + oy;
              if (sy < 0 || sy >= static_cast<std::ptrdiff_t>(h)) continue;
              const T* s = row + n * hw + y * w;
              T* d = dst + static_cast<std::size_t>(sy) * w;
              for (std::size_t xx = x0; xx < x1; ++xx)
                d[static_cast<std::size_t>(static_cast<std::ptrdiff_t>(xx) + ox)] += s[xx];
            }
          }
        }
  }

  std::size_t in_ = 0, out_ = 0, k_ = 1, pad_ = 0;
  std::vector<T> weight_, bias_, dweight_, dbias_;
};

// Per-channel batch normalization over (batch, height, width).
template <typename T>
class batch_norm {
 public:
  static constexpr double kEps = 1e-5;
  static constexpr double kMomentum = 0.1;

  batch_norm() = default;
  explicit batch_norm(std::size_t channels)
      : c_(channels),
        gamma_(channels, T(1)),
        beta_(channels, T(0)),
        running_mean_(channels, T(0)),
        running_var_(channels, T(1)),
        dgamma_(channels),
        dbeta_(channels) {}

  std::size_t channels() const noexcept { return c_; }

  std::vector<tensor_slot<T>> slots() {
    return {{"gamma", {c_}, &gamma_, &dgamma_},
            {"beta", {c_}, &beta_, &dbeta_},
            {"running_mean", {c_}, &running_mean_, nullptr},
            {"running_var", {c_}, &running_var_, nullptr}};
  }

  // Normalizes x in place. In the training phases the normalized values and
  // inverse deviations are kept for backward.
  void forward(feature_map<T>& x, phase ph) {
    const std::size_t m = x.spatial();
    inv_std_.assign(c_, 0.0);
    if (ph != phase::eval) xhat_ = feature_map<T>(c_, x.batch, x.height, x.width);
    for (std::size_t c = 0; c < c_; ++c) {
      T* p = x.channel(c);
      double mean, var;
      if (ph == phase::eval) {
        mean = running_mean_[c];
        var = running_var_[c];
      } else {
        double s = 0, ss = 0;
        for (std::size_t i = 0; i < m; ++i) s += p[i];
        mean = s / static_cast<double>(m);
        for (std::size_t i = 0; i < m; ++i) {
          const double d = p[i] - mean;
          ss += d * d;
        }
        var = ss / static_cast<double>(m);
        if (ph == phase::train) {
          const double unbiased = m > 1 ? ss / static_cast<double>(m - 1) : var;
          running_mean_[c] = static_cast<T>((1 - kMomentum) * running_mean_[c] + kMomentum * mean);
          running_var_[c] = static_cast<T>((1 - kMomentum) * running_var_[c] + kMomentum * unbiased);
        }
      }
      const double inv = 1.0 / std::sqrt(var + kEps);
      inv_std_[c] = inv;
      const double g = gamma_[c], b = beta_[c];
      T* xh = ph == phase::eval ? nullptr : xhat_.channel(c);
      for (std::size_t i = 0; i < m; ++i) {
        const double n = (p[i] - mean) * inv;
        if (xh) xh[i] = static_cast<T>(n);
        p[i] = static_cast<T>(g * n + b);
      }
    }
  }

  // dy is overwritten with the input gradient.
  void backward(feature_map<T>& dy) {
    const std::size_t m = dy.spatial();
    for (std::size_t c = 0; c < c_; ++c) {
      T* g = dy.channel(c);
      const T* xh = xhat_.channel(c);
      double sg = 0, sgx = 0;
      for (std::size_t i = 0; i < m; ++i) {
        sg += g[i];
        sgx += static_cast<double>(g[i]) * xh[i];
      }
      dgamma_[c] += static_cast<T>(sgx);
      dbeta_[c] += static_cast<T>(sg);
      const double scale = gamma_[c] * inv_std_[c] / static_cast<double>(m);
      const double md = static_cast<double>(m);
      for (std::size_t i = 0; i < m; ++i) g[i] = static_cast<T>(scale * (md * g[i] - sg - xh[i] * sgx));
    }
  }

 private:
  std::size_t c_ = 0;
  std::vector<T> gamma_, beta_, running_mean_, running_var_, dgamma_, dbeta_;
  feature_map<T> xhat_;
  std::vector<double> inv_std_;
};

// Convolution, optional batch norm, optional ReLU, with cached activations.
template <typename T>
class conv_block {
 public:
  conv_block() = default;
  conv_block(std::size_t in, std::size_t out, std::size_t kernel, std::size_t padding, bool with_bn,
             bool with_relu)
      : conv_(in, out, kernel, padding), bn_(with_bn ? out : 0), has_bn_(with_bn), relu_(with_relu) {}

  conv2d<T>& conv() noexcept { return conv_; }
  const conv2d<T>& conv() const noexcept { return conv_; }
  bool has_bn() const noexcept { return has_bn_; }
  bool has_relu() const noexcept { return relu_; }

  std::vector<tensor_slot<T>> slots() {
    std::vector<tensor_slot<T>> out;
    append_slots(out, "conv", conv_.slots());
    if (has_bn_) append_slots(out, "bn", bn_.slots());
    return out;
  }

  feature_map<T> forward(const feature_map<T>& x, phase ph) {
    if (ph != phase::eval) input_ = x;
    feature_map<T> y = conv_.forward(x);
    if (has_bn_) bn_.forward(y, ph);
    if (relu_)
      for (auto& v : y.data) v = v > T(0) ? v : T(0);
    if (ph != phase::eval && relu_) output_ = y;
    return y;
  }

  feature_map<T> backward(feature_map<T> dy, bool want_input_grad) {
    if (relu_)
      for (std::size_t i = 0; i < dy.size(); ++i)
        if (!(output_.data[i] > T(0))) dy.data[i] = T(0);
    if (has_bn_) bn_.backward(dy);
    return conv_.backward(input_, dy, want_input_grad);
  }

  void release() {
    input_ = {};
    output_ = {};
  }

 private:
  conv2d<T> conv_;
  batch_norm<T> bn_;
  bool has_bn_ = false;
  bool relu_ = false;
  feature_map<T> input_, output_;
};

// Global average pooling: [C][N][H][W] -> [C][N] (stored as C x N x 1 x 1).
template <typename T>
feature_map<T> global_average_pool(const feature_map<T>& x) {
  feature_map<T> y(x.channels, x.batch, 1, 1);
  const std::size_t hw = x.plane();
  for (std::size_t c = 0; c < x.channels; ++c)
    for (std::size_t n = 0; n < x.batch; ++n) {
      const T* p = x.slice(c, n);
      double s = 0;
      for (std::size_t i = 0; i < hw; ++i) s += p[i];
      y.data[c * x.batch + n] = static_cast<T>(s / static_cast<double>(hw));
    }
  return y;
}

template <typename T>
feature_map<T> global_average_pool_backward(const feature_map<T>& dy, std::size_t h, std::size_t w) {
  feature_map<T> dx(dy.channels, dy.batch, h, w);
  const std::size_t hw = h * w;
  for (std::size_t c = 0; c < dy.channels; ++c)
    for (std::size_t n = 0; n < dy.batch; ++n) {
      const T g = static_cast<T>(dy.data[c * dy.batch + n] / static_cast<double>(hw));
      std::fill_n(dx.slice(c, n), hw, g);
    }
  return dx;
}

// Fully connected layer on [features][batch] columns.
template <typename T>
class linear {
 public:
  linear() = default;
  linear(std::size_t in, std::size_t out)
      : in_(in), out_(out), weight_(in * out), bias_(out), dweight_(in * out), dbias_(out) {}

  std::size_t in_features() const noexcept { return in_; }
  std::size_t out_features() const noexcept { return out_; }
  std::size_t fan_in() const noexcept { return in_; }
  std::vector<T>& weight() noexcept { return weight_; }
  std::vector<T>& bias() noexcept { return bias_; }

  std::vector<tensor_slot<T>> slots() {
    return {{"weight", {out_, in_}, &weight_, &dweight_}, {"bias", {out_}, &bias_, &dbias_}};
  }

  feature_map<T> forward(const feature_map<T>& x, phase ph) {
    if (x.channels != in_ || x.plane() != 1) throw shape_error("linear: unexpected input shape");
    if (ph != phase::eval) input_ = x;
    feature_map<T> y(out_, x.batch, 1, 1);
    gemm(false, false, out_, x.batch, in_, T(1), weight_.data(), in_, x.data.data(), x.batch, T(0),
         y.data.data(), x.batch);
    for (std::size_t o = 0; o < out_; ++o)
      for (std::size_t n = 0; n < x.batch; ++n) y.data[o * x.batch + n] += bias_[o];
    return y;
  }

  feature_map<T> backward(const feature_map<T>& dy) {
    const std::size_t nb = dy.batch;
    for (std::size_t o = 0; o < out_; ++o)
      for (std::size_t n = 0; n < nb; ++n) dbias_[o] += dy.data[o * nb + n];
    gemm(false, true, out_, in_, nb, T(1), dy.data.data(), nb, input_.data.data(), nb, T(1), dweight_.data(),
         in_);
    feature_map<T> dx(in_, nb, 1, 1);
    gemm(true, false, in_, nb, out_, T(1), weight_.data(), in_, dy.data.data(), nb, T(0), dx.data.data(), nb);
    return dx;
  }

 private:
  std::size_t in_ = 0, out_ = 0;
  std::vector<T> weight_, bias_, dweight_, dbias_;
  feature_map<T> input_;
};

template <typename T>
void zero_grads(const std::vector<tensor_slot<T>>& slots) {
  for (const auto& s : slots)
    if (s.grad) std::fill(s.grad->begin(), s.grad->end(), T(0));
}

// Adam with bias-corrected moments.
template <typename T>
class adam {
 public:
  adam() = default;
  explicit adam(std::vector<tensor_slot<T>> slots, double beta1 = 0.9, double beta2 = 0.999,
                double eps = 1e-8)
      : beta1_(beta1), beta2_(beta2), eps_(eps) {
    for (auto& s : slots)
      if (s.grad) {
        params_.push_back(s);
        m_.emplace_back(s.value->size(), 0.0);
        v_.emplace_back(s.value->size(), 0.0);
      }
  }

  void step(double lr) {
    ++t_;
    const double c1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
    const double c2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
    for (std::size_t p = 0; p < params_.size(); ++p) {
      auto& val = *params_[p].value;
      const auto& g = *params_[p].grad;
      auto& m = m_[p];
      auto& v = v_[p];
      for (std::size_t i = 0; i < val.size(); ++i) {
        const double gi = g[i];
        m[i] = beta1_ * m[i] + (1 - beta1_) * gi;
        v[i] = beta2_ * v[i] + (1 - beta2_) * gi * gi;
        const double mh = m[i] / c1, vh = v[i] / c2;
        val[i] = static_cast<T>(val[i] - lr * mh / (std::sqrt(vh) + eps_));
      }
    }
  }

  std::size_t steps() const noexcept { return t_; }

 private:
  double beta1_ = 0.9, beta2_ = 0.999, eps_ = 1e-8;
  std::size_t t_ = 0;
  std::vector<tensor_slot<T>> params_;
  std::vector<std::vector<double>> m_, v_;
};

}  // namespace sfwm::nn
