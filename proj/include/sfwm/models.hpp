#pragma once

// Encoder, decoder and discriminator networks, parameter initialization and
// the checkpoint container.

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "sfwm/common.hpp"
#include "sfwm/io.hpp"
#include "sfwm/layers.hpp"
#include "sfwm/tensor.hpp"
#include "sfwm/watermark.hpp"

namespace sfwm {

struct model_config {
  std::size_t width = 64;  // hidden channels of every convolution
  std::size_t watermark_bits = kDefaultWatermarkBits;

  bool operator==(const model_config&) const = default;
};

// One row of an architecture table.
struct layer_spec {
  std::string type;  // "conv", "gap", "flatten", "fc"
  std::size_t in = 0, out = 0, kernel = 0, stride = 0, padding = 0;
  bool batch_norm = false;
  std::string activation;  // "relu" or "none"

  bool operator==(const layer_spec&) const = default;
};

inline std::vector<layer_spec> encoder_architecture(const model_config& cfg) {
  const std::size_t w = cfg.width;
  return {
      {"conv", 3, w, 3, 1, 1, true, "relu"},
      {"conv", w, w, 3, 1, 1, true, "relu"},
      {"conv", w, w, 3, 1, 1, true, "relu"},
      {"conv", w, w, 3, 1, 1, true, "relu"},
      {"conv", w + cfg.watermark_bits + 3, w, 3, 1, 1, true, "relu"},
      {"conv", w, 3, 1, 1, 0, false, "none"},
  };
}

inline std::vector<layer_spec> decoder_architecture(const model_config& cfg) {
  const std::size_t w = cfg.width, l = cfg.watermark_bits;
  std::vector<layer_spec> t = {{"conv", 3, w, 3, 1, 1, true, "relu"}};
  for (int i = 0; i < 6; ++i) t.push_back({"conv", w, w, 3, 1, 1, true, "relu"});
  t.push_back({"conv", w, l, 3, 1, 1, true, "relu"});
  t.push_back({"gap", l, l, 0, 0, 0, false, "none"});
  t.push_back({"flatten", 0, 0, 0, 0, 0, false, "none"});
  t.push_back({"fc", l, l, 0, 0, 0, false, "none"});
  return t;
}

inline std::vector<layer_spec> discriminator_architecture(const model_config& cfg) {
  const std::size_t w = cfg.width;
  return {
      {"conv", 3, w, 3, 1, 1, true, "relu"},
      {"conv", w, w, 3, 1, 1, true, "relu"},
      {"conv", w, w, 3, 1, 1, true, "relu"},
      {"gap", w, w, 0, 0, 0, false, "none"},
      {"flatten", 0, 0, 0, 0, 0, false, "none"},
      {"fc", w, 1, 0, 0, 0, false, "none"},
  };
}

namespace detail {

template <typename T>
std::vector<nn::conv_block<T>> build_convs(const std::vector<layer_spec>& table) {
  std::vector<nn::conv_block<T>> blocks;
  for (const auto& l : table)
    if (l.type == "conv")
      blocks.emplace_back(l.in, l.out, l.kernel, l.padding, l.batch_norm, l.activation == "relu");
  return blocks;
}

template <typename T>
layer_spec describe(const nn::conv_block<T>& b) {
  const auto& c = b.conv();
  return {"conv", c.in_channels(), c.out_channels(), c.kernel(), c.stride(), c.padding(), b.has_bn(),
          b.has_relu() ? "relu" : "none"};
}

// Compares the constructed convolution stack and head with its table.
template <typename T>
void verify(const std::string& what, const std::vector<layer_spec>& table,
            const std::vector<nn::conv_block<T>>& convs, std::size_t fc_in, std::size_t fc_out) {
  std::size_t ci = 0;
  for (const auto& row : table) {
    if (row.type == "conv") {
      if (ci >= convs.size() || !(describe(convs[ci]) == row))
        throw shape_error(what + ": convolution " + std::to_string(ci + 1) + " does not match its table");
      ++ci;
    } else if (row.type == "fc") {
      if (row.in != fc_in || row.out != fc_out) throw shape_error(what + ": fully connected head mismatch");
    }
  }
  if (ci != convs.size()) throw shape_error(what + ": unexpected number of convolutions");
}

template <typename T>
feature_map<T> watermark_planes(const std::vector<watermark>& marks, std::size_t bits, std::size_t h,
                                std::size_t w) {
  feature_map<T> fm(bits, marks.size(), h, w);
  for (std::size_t n = 0; n < marks.size(); ++n) {
    if (marks[n].size() != bits)
      throw shape_error("watermark length " + std::to_string(marks[n].size()) + " does not match " +
                        std::to_string(bits));
    for (std::size_t b = 0; b < bits; ++b) std::fill_n(fm.slice(b, n), h * w, static_cast<T>(marks[n][b]));
  }
  return fm;
}

}  // namespace detail

template <typename T>
class encoder {
 public:
  encoder() = default;
  explicit encoder(const model_config& cfg) : cfg_(cfg), blocks_(detail::build_convs<T>(encoder_architecture(cfg))) {
    detail::verify("encoder", encoder_architecture(cfg), blocks_, 0, 0);
  }

  const model_config& config() const noexcept { return cfg_; }
  std::vector<nn::conv_block<T>>& blocks() noexcept { return blocks_; }
  const std::vector<nn::conv_block<T>>& blocks() const noexcept { return blocks_; }

  std::vector<nn::tensor_slot<T>> slots() {
    std::vector<nn::tensor_slot<T>> out;
    for (std::size_t i = 0; i < blocks_.size(); ++i)
      nn::append_slots(out, "encoder.layer" + std::to_string(i + 1), blocks_[i].slots());
    return out;
  }

  // images: [3][N][H][W]; returns the watermarked batch, unclamped.
  feature_map<T> forward(const feature_map<T>& images, const std::vector<watermark>& marks, nn::phase ph) {
    if (images.channels != kChannels) throw shape_error("encoder expects RGB input");
    if (marks.size() != images.batch) throw shape_error("encoder: one watermark per image required");
    feature_map<T> f = images;
    for (std::size_t i = 0; i < 4; ++i) f = blocks_[i].forward(f, ph);
    const auto wm = detail::watermark_planes<T>(marks, cfg_.watermark_bits, images.height, images.width);
    feature_map<T> cat(f.channels + wm.channels + kChannels, images.batch, images.height, images.width);
    std::copy(f.data.begin(), f.data.end(), cat.data.begin());
    std::copy(wm.data.begin(), wm.data.end(), cat.data.begin() + static_cast<std::ptrdiff_t>(f.size()));
    std::copy(images.data.begin(), images.data.end(),
              cat.data.begin() + static_cast<std::ptrdiff_t>(f.size() + wm.size()));
    feature_map<T> y = blocks_[4].forward(cat, ph);
    return blocks_[5].forward(y, ph);
  }

  // Accumulates parameter gradients for d(loss)/d(output).
  void backward(const feature_map<T>& dy) {
    feature_map<T> g = blocks_[5].backward(dy, true);
    g = blocks_[4].backward(std::move(g), true);
    feature_map<T> df(cfg_.width, g.batch, g.height, g.width);
    std::copy_n(g.data.begin(), df.size(), df.data.begin());
    for (std::size_t i = 4; i-- > 0;) df = blocks_[i].backward(std::move(df), i > 0);
  }

 private:
  model_config cfg_;
  std::vector<nn::conv_block<T>> blocks_;
};

template <typename T>
class decoder {
 public:
  decoder() = default;
  explicit decoder(const model_config& cfg)
      : cfg_(cfg),
        blocks_(detail::build_convs<T>(decoder_architecture(cfg))),
        fc_(cfg.watermark_bits, cfg.watermark_bits) {
    detail::verify("decoder", decoder_architecture(cfg), blocks_, fc_.in_features(), fc_.out_features());
  }

  const model_config& config() const noexcept { return cfg_; }
  std::vector<nn::conv_block<T>>& blocks() noexcept { return blocks_; }
  nn::linear<T>& fc() noexcept { return fc_; }

  std::vector<nn::tensor_slot<T>> slots() {
    std::vector<nn::tensor_slot<T>> out;
    for (std::size_t i = 0; i < blocks_.size(); ++i)
      nn::append_slots(out, "decoder.layer" + std::to_string(i + 1), blocks_[i].slots());
    nn::append_slots(out, "decoder.fc", fc_.slots());
    return out;
  }

  // Returns logits as [bits][N].
  feature_map<T> forward(const feature_map<T>& images, nn::phase ph) {
    if (images.channels != kChannels) throw shape_error("decoder expects RGB input");
    feature_map<T> f = images;
    for (auto& b : blocks_) f = b.forward(f, ph);
    h_ = f.height;
    w_ = f.width;
    return fc_.forward(nn::global_average_pool(f), ph);
  }

  // Returns d(loss)/d(images).
  feature_map<T> backward(const feature_map<T>& dlogits, bool want_input_grad = true) {
    feature_map<T> g = nn::global_average_pool_backward(fc_.backward(dlogits), h_, w_);
    for (std::size_t i = blocks_.size(); i-- > 0;) g = blocks_[i].backward(std::move(g), i > 0 || want_input_grad);
    return g;
  }

 private:
  model_config cfg_;
  std::vector<nn::conv_block<T>> blocks_;
  nn::linear<T> fc_;
  std::size_t h_ = 0, w_ = 0;
};

template <typename T>
class discriminator {
 public:
  discriminator() = default;
  explicit discriminator(const model_config& cfg)
      : cfg_(cfg), blocks_(detail::build_convs<T>(discriminator_architecture(cfg))), fc_(cfg.width, 1) {
    detail::verify("discriminator", discriminator_architecture(cfg), blocks_, fc_.in_features(),
                   fc_.out_features());
  }

  std::vector<nn::conv_block<T>>& blocks() noexcept { return blocks_; }
  nn::linear<T>& fc() noexcept { return fc_; }

  std::vector<nn::tensor_slot<T>> slots() {
    std::vector<nn::tensor_slot<T>> out;
    for (std::size_t i = 0; i < blocks_.size(); ++i)
      nn::append_slots(out, "discriminator.layer" + std::to_string(i + 1), blocks_[i].slots());
    nn::append_slots(out, "discriminator.fc", fc_.slots());
    return out;
  }

  // Probability that each image is not watermarked: logistic(FC(GAP(conv))).
  std::vector<double> forward(const feature_map<T>& images, nn::phase ph) {
    feature_map<T> f = images;
    for (auto& b : blocks_) f = b.forward(f, ph);
    h_ = f.height;
    w_ = f.width;
    const auto logit = fc_.forward(nn::global_average_pool(f), ph);
    probs_.resize(images.batch);
    for (std::size_t n = 0; n < images.batch; ++n) probs_[n] = 1.0 / (1.0 + std::exp(-static_cast<double>(logit.data[n])));
    return probs_;
  }

  feature_map<T> backward(const std::vector<double>& dprob, bool want_input_grad) {
    feature_map<T> dlogit(1, dprob.size(), 1, 1);
    for (std::size_t n = 0; n < dprob.size(); ++n)
      dlogit.data[n] = static_cast<T>(dprob[n] * probs_[n] * (1.0 - probs_[n]));
    feature_map<T> g = nn::global_average_pool_backward(fc_.backward(dlogit), h_, w_);
    for (std::size_t i = blocks_.size(); i-- > 0;) g = blocks_[i].backward(std::move(g), i > 0 || want_input_grad);
    return g;
  }

 private:
  model_config cfg_;
  std::vector<nn::conv_block<T>> blocks_;
  nn::linear<T> fc_;
  std::vector<double> probs_;
  std::size_t h_ = 0, w_ = 0;
};

template <typename T>
struct basic_model_bundle {
  model_config config;
  encoder<T> enc;
  decoder<T> dec;
  discriminator<T> disc;

  basic_model_bundle() = default;
  explicit basic_model_bundle(const model_config& cfg) : config(cfg), enc(cfg), dec(cfg), disc(cfg) {}

  std::vector<nn::tensor_slot<T>> slots() {
    auto out = enc.slots();
    for (auto& s : dec.slots()) out.push_back(s);
    for (auto& s : disc.slots()) out.push_back(s);
    return out;
  }
};

using model_bundle = basic_model_bundle<float>;

// Kernels uniform in +-sqrt(1/fan_in), biases zero, batch-norm identity.
template <typename T>
basic_model_bundle<T> init_params(std::uint64_t seed, const model_config& cfg = {}) {
  basic_model_bundle<T> b(cfg);
  rng_t rng(seed);
  for (auto& s : b.slots()) {
    auto& v = *s.value;
    const std::string& n = s.name;
    auto ends_with = [&](const std::string& suffix) {
      return n.size() >= suffix.size() && n.compare(n.size() - suffix.size(), suffix.size(), suffix) == 0;
    };
    if (ends_with(".weight")) {
      std::size_t fan_in = 1;
      for (std::size_t i = 1; i < s.shape.size(); ++i) fan_in *= s.shape[i];
      const double bound = std::sqrt(1.0 / static_cast<double>(fan_in));
      for (auto& x : v) x = static_cast<T>((2.0 * uniform01(rng) - 1.0) * bound);
    } else if (ends_with(".gamma") || ends_with(".running_var")) {
      std::fill(v.begin(), v.end(), T(1));
    } else {
      std::fill(v.begin(), v.end(), T(0));
    }
  }
  return b;
}

// ---------------------------------------------------------------------------
// Checkpoint container, little-endian:
//   "SFWMCKPT" | u32 version | u64 manifest length | manifest JSON | f32 data
// The manifest lists every tensor (name, shape, element offset) in order, the
// model configuration, dtype "f32le" and the producing config hash.

inline constexpr std::uint32_t kCheckpointVersion = 1;

template <typename T>
std::string serialize_checkpoint(basic_model_bundle<T>& bundle, const std::string& config_hash) {
  nlohmann::json manifest;
  manifest["format"] = "sfwm-checkpoint";
  manifest["version"] = kCheckpointVersion;
  manifest["dtype"] = "f32le";
  manifest["config_hash"] = config_hash;
  manifest["model"] = {{"width", bundle.config.width}, {"watermark_bits", bundle.config.watermark_bits}};
  nlohmann::json tensors = nlohmann::json::array();
  std::size_t offset = 0;
  const auto slots = bundle.slots();
  for (const auto& s : slots) {
    tensors.push_back({{"name", s.name}, {"shape", s.shape}, {"offset", offset}, {"count", s.value->size()}});
    offset += s.value->size();
  }
  manifest["tensors"] = tensors;
  const std::string text = manifest.dump();
  std::string out = "SFWMCKPT";
  io::put_u32(out, kCheckpointVersion);
  io::put_u64(out, text.size());
  out += text;
  for (const auto& s : slots)
    for (T v : *s.value) io::put_f32(out, static_cast<float>(v));
  return out;
}

struct checkpoint_info {
  model_config model;
  std::string config_hash;
};

template <typename T>
basic_model_bundle<T> deserialize_checkpoint(std::string_view bytes, checkpoint_info* info = nullptr) {
  io::reader r(bytes);
  if (r.take(8) != "SFWMCKPT") throw format_error("not a checkpoint (bad magic)");
  const auto version = r.u32();
  if (version != kCheckpointVersion) throw format_error("unsupported checkpoint version " + std::to_string(version));
  const auto len = r.u64();
  nlohmann::json manifest;
  try {
    manifest = nlohmann::json::parse(r.take(len));
  } catch (const nlohmann::json::exception& e) {
    throw format_error(std::string("corrupt checkpoint manifest: ") + e.what());
  }
  if (manifest.value("dtype", "") != "f32le") throw format_error("checkpoint dtype must be f32le");
  model_config cfg;
  cfg.width = manifest.at("model").at("width").get<std::size_t>();
  cfg.watermark_bits = manifest.at("model").at("watermark_bits").get<std::size_t>();
  basic_model_bundle<T> bundle(cfg);
  auto slots = bundle.slots();
  const auto& tensors = manifest.at("tensors");
  if (tensors.size() != slots.size()) throw format_error("checkpoint tensor count does not match architecture");
  for (std::size_t i = 0; i < slots.size(); ++i) {
    const auto& t = tensors[i];
    if (t.at("name").get<std::string>() != slots[i].name ||
        t.at("shape").get<std::vector<std::size_t>>() != slots[i].shape)
      throw format_error("checkpoint tensor " + t.at("name").get<std::string>() + " has unexpected name or shape");
  }
  for (auto& s : slots)
    for (auto& v : *s.value) v = static_cast<T>(r.f32());
  if (!r.done()) throw format_error("trailing bytes after checkpoint data");
  if (info) {
    info->model = cfg;
    info->config_hash = manifest.value("config_hash", "");
  }
  return bundle;
}

template <typename T>
void save_checkpoint(basic_model_bundle<T>& bundle, const std::filesystem::path& path, const std::string& config_hash) {
  io::atomic_write(path, serialize_checkpoint(bundle, config_hash));
}

template <typename T = float>
basic_model_bundle<T> load_checkpoint(const std::filesystem::path& path, checkpoint_info* info = nullptr) {
  return deserialize_checkpoint<T>(io::read_file(path), info);
}

// ---------------------------------------------------------------------------
// Inference helpers (running batch-norm statistics).

template <typename T>
std::vector<basic_image<T>> embed(basic_model_bundle<T>& b, const std::vector<basic_image<T>>& images,
                                  const std::vector<watermark>& marks, bool clamp = true) {
  auto out = to_images(b.enc.forward(from_images(images), marks, nn::phase::eval));
  if (clamp)
    for (auto& img : out) img = clamp01(std::move(img));
  return out;
}

template <typename T>
std::vector<watermark_logits> extract(basic_model_bundle<T>& b, const std::vector<basic_image<T>>& images) {
  const auto logits = b.dec.forward(from_images(images), nn::phase::eval);
  std::vector<watermark_logits> out(images.size());
  for (std::size_t n = 0; n < images.size(); ++n) {
    out[n].values.resize(logits.channels);
    for (std::size_t k = 0; k < logits.channels; ++k) out[n].values[k] = logits.data[k * logits.batch + n];
  }
  return out;
}

}  // namespace sfwm
