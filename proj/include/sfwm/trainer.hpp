#pragma once

// Joint encoder/decoder/discriminator training with the post-processing
// module between encoder and decoder.

#include <algorithm>
#include <cmath>
#include <functional>
#include <numbers>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "sfwm/common.hpp"
#include "sfwm/image.hpp"
#include "sfwm/io.hpp"
#include "sfwm/jpeg.hpp"
#include "sfwm/layers.hpp"
#include "sfwm/models.hpp"
#include "sfwm/postprocess.hpp"
#include "sfwm/scheduler.hpp"
#include "sfwm/tensor.hpp"
#include "sfwm/watermark.hpp"

namespace sfwm {

enum class epsilon_unit { epoch, step };

struct training_config {
  std::size_t epochs = 40000;
  std::size_t batch_size = 30;
  std::size_t watermark_len = kDefaultWatermarkBits;
  double lr_initial = 0.001;
  double lambda1 = 0.7;
  double lambda2 = 0.001;
  scheduler_kind scheduler = scheduler_kind::rl;
  jpeg::gradient_mode jpeg_gradient = jpeg::gradient_mode::surrogate;
  std::uint64_t seed = 0;
  std::size_t image_size = 64;
  std::size_t model_width = 64;
  scheduler_config sched;
  epsilon_unit epsilon_decay_unit = epsilon_unit::epoch;
  std::size_t validate_every = 0;     // epochs between validation passes; 0 = only at the end
  std::size_t validation_images = 0;  // cap on validation images used for selection; 0 = all

  model_config model() const { return {model_width, watermark_len}; }

  void validate() const {
    if (!(lambda1 >= 0.0) || !(lambda2 >= 0.0)) throw parameter_error("loss weights must be non-negative");
    if (batch_size == 0) throw parameter_error("batch size must be positive");
    if (epochs == 0) throw parameter_error("epochs must be positive");
    if (watermark_len == 0) throw parameter_error("watermark length must be positive");
    if (image_size < kMinImageSide) throw parameter_error("image size must be at least 8");
    if (!(lr_initial > 0.0)) throw parameter_error("learning rate must be positive");
    sched.validate();
  }
};

inline nlohmann::json to_json(const training_config& c) {
  return {
      {"epochs", c.epochs},
      {"batch_size", c.batch_size},
      {"watermark_len", c.watermark_len},
      {"lr_initial", c.lr_initial},
      {"lambda1", c.lambda1},
      {"lambda2", c.lambda2},
      {"scheduler", c.scheduler == scheduler_kind::rl ? "rl" : "random"},
      {"jpeg_gradient", c.jpeg_gradient == jpeg::gradient_mode::surrogate ? "surrogate" : "zero"},
      {"seed", c.seed},
      {"image_size", c.image_size},
      {"model_width", c.model_width},
      {"epsilon_decay_unit", c.epsilon_decay_unit == epsilon_unit::epoch ? "epoch" : "step"},
      {"validate_every", c.validate_every},
      {"validation_images", c.validation_images},
      {"scheduler_config",
       {{"n_states", c.sched.n_states},
        {"beta", c.sched.beta},
        {"bias", c.sched.bias},
        {"alpha", c.sched.alpha},
        {"gamma", c.sched.gamma},
        {"epsilon0", c.sched.epsilon0},
        {"epsilon_hold", c.sched.epsilon_hold},
        {"epsilon_decay", c.sched.epsilon_decay},
        {"epsilon_floor", c.sched.epsilon_floor}}},
  };
}

// Missing keys keep their defaults.
inline training_config training_config_from_json(const nlohmann::json& j) {
  training_config c;
  c.epochs = j.value("epochs", c.epochs);
  c.batch_size = j.value("batch_size", c.batch_size);
  c.watermark_len = j.value("watermark_len", c.watermark_len);
  c.lr_initial = j.value("lr_initial", c.lr_initial);
  c.lambda1 = j.value("lambda1", c.lambda1);
  c.lambda2 = j.value("lambda2", c.lambda2);
  const std::string sched = j.value("scheduler", std::string("rl"));
  if (sched != "rl" && sched != "random") throw parameter_error("scheduler must be rl or random");
  c.scheduler = sched == "rl" ? scheduler_kind::rl : scheduler_kind::random;
  const std::string jg = j.value("jpeg_gradient", std::string("surrogate"));
  if (jg != "surrogate" && jg != "zero") throw parameter_error("jpeg_gradient must be surrogate or zero");
  c.jpeg_gradient = jg == "surrogate" ? jpeg::gradient_mode::surrogate : jpeg::gradient_mode::zero;
  c.seed = j.value("seed", c.seed);
  c.image_size = j.value("image_size", c.image_size);
  c.model_width = j.value("model_width", c.model_width);
  const std::string unit = j.value("epsilon_decay_unit", std::string("epoch"));
  if (unit != "epoch" && unit != "step") throw parameter_error("epsilon_decay_unit must be epoch or step");
  c.epsilon_decay_unit = unit == "epoch" ? epsilon_unit::epoch : epsilon_unit::step;
  c.validate_every = j.value("validate_every", c.validate_every);
  c.validation_images = j.value("validation_images", c.validation_images);
  if (j.contains("scheduler_config")) {
    const auto& s = j.at("scheduler_config");
    c.sched.n_states = s.value("n_states", c.sched.n_states);
    c.sched.beta = s.value("beta", c.sched.beta);
    c.sched.bias = s.value("bias", c.sched.bias);
    c.sched.alpha = s.value("alpha", c.sched.alpha);
    c.sched.gamma = s.value("gamma", c.sched.gamma);
    c.sched.epsilon0 = s.value("epsilon0", c.sched.epsilon0);
    c.sched.epsilon_hold = s.value("epsilon_hold", c.sched.epsilon_hold);
    c.sched.epsilon_decay = s.value("epsilon_decay", c.sched.epsilon_decay);
    c.sched.epsilon_floor = s.value("epsilon_floor", c.sched.epsilon_floor);
  }
  c.validate();
  return c;
}

inline std::string config_hash(const training_config& c) { return io::sha256_hex(to_json(c).dump()); }

// ---------------------------------------------------------------------------
// Losses

inline constexpr double kProbClamp = 1e-7;

inline double clamp_prob(double p) { return std::clamp(p, kProbClamp, 1.0 - kProbClamp); }

struct loss_breakdown {
  double reconstruction = 0;
  double pixel = 0;
  double adversarial = 0;
  double total = 0;
  double discriminator = 0;
};

inline nlohmann::json to_json(const loss_breakdown& l) {
  return {{"reconstruction", l.reconstruction}, {"pixel", l.pixel}, {"adversarial", l.adversarial},
          {"total", l.total}, {"discriminator", l.discriminator}};
}

// Batch-mean encoder/decoder objective: squared error over watermark logits,
// squared error over pixels, and lambda2 * log(1 - D(I_w)).
template <typename T>
loss_breakdown loss_encdec(const std::vector<basic_image<T>>& original, const std::vector<basic_image<T>>& marked,
                           const std::vector<watermark>& marks, const std::vector<watermark_logits>& decoded,
                           const std::vector<double>& d_prob, double lambda1, double lambda2) {
  const std::size_t n = original.size();
  if (n == 0 || marked.size() != n || marks.size() != n || decoded.size() != n || d_prob.size() != n)
    throw shape_error("loss_encdec: inconsistent batch sizes");
  double rec = 0, pix = 0, adv = 0;
  std::size_t rec_count = 0, pix_count = 0;
  for (std::size_t i = 0; i < n; ++i) {
    if (decoded[i].values.size() != marks[i].size()) throw shape_error("loss_encdec: logit length mismatch");
    for (std::size_t k = 0; k < marks[i].size(); ++k) {
      const double d = decoded[i].values[k] - marks[i][k];
      rec += d * d;
    }
    rec_count += marks[i].size();
    if (!original[i].same_shape(marked[i])) throw shape_error("loss_encdec: image shape mismatch");
    for (std::size_t k = 0; k < original[i].size(); ++k) {
      const double d = static_cast<double>(marked[i].data()[k]) - original[i].data()[k];
      pix += d * d;
    }
    pix_count += original[i].size();
    adv += std::log(1.0 - clamp_prob(d_prob[i]));
  }
  loss_breakdown l;
  l.reconstruction = rec / static_cast<double>(rec_count);
  l.pixel = pix / static_cast<double>(pix_count);
  l.adversarial = adv / static_cast<double>(n);
  l.total = l.reconstruction + lambda1 * l.pixel + lambda2 * l.adversarial;
  return l;
}

// Mean of log(1 - D(I)) + log(D(I_w)); minimized by the discriminator.
inline double loss_discriminator(const std::vector<double>& d_real, const std::vector<double>& d_wm) {
  if (d_real.empty() || d_real.size() != d_wm.size()) throw shape_error("loss_discriminator: batch mismatch");
  double s = 0;
  for (std::size_t i = 0; i < d_real.size(); ++i)
    s += std::log(1.0 - clamp_prob(d_real[i])) + std::log(clamp_prob(d_wm[i]));
  return s / static_cast<double>(d_real.size());
}

// Cosine annealing from lr_initial at step 0 to 0 at total_steps.
inline double lr_at(std::size_t step, std::size_t total_steps, double lr_initial) {
  if (total_steps == 0) return lr_initial;
  const double t = std::min(1.0, static_cast<double>(step) / static_cast<double>(total_steps));
  return std::max(0.0, lr_initial * 0.5 * (1.0 + std::cos(std::numbers::pi * t)));
}

inline double mean_bitwise_accuracy(const std::vector<watermark>& marks, const std::vector<watermark_logits>& decoded) {
  double s = 0;
  for (std::size_t i = 0; i < marks.size(); ++i) s += bitwise_accuracy(harden(decoded[i]), marks[i]);
  return marks.empty() ? 0.0 : s / static_cast<double>(marks.size());
}

struct step_result {
  loss_breakdown loss;
  double accuracy = 0;  // f_t
  post_process_op op;
  std::optional<scheduler_record> sched;
};

namespace detail {

template <typename T>
std::vector<watermark_logits> logits_of(const feature_map<T>& fm) {
  std::vector<watermark_logits> out(fm.batch);
  for (std::size_t n = 0; n < fm.batch; ++n) {
    out[n].values.resize(fm.channels);
    for (std::size_t k = 0; k < fm.channels; ++k) out[n].values[k] = fm.data[k * fm.batch + n];
  }
  return out;
}

}  // namespace detail

// Owns a bundle together with its optimizers and scheduler. Not movable: the
// optimizers hold pointers into the bundle.
template <typename T>
class trainer {
 public:
  trainer(basic_model_bundle<T> bundle, const training_config& cfg)
      : cfg_(cfg),
        rng_(cfg.seed ^ 0x5eed5eedULL),
        bundle_(std::move(bundle)),
        opt_enc_(bundle_.enc.slots()),
        opt_dec_(bundle_.dec.slots()),
        opt_disc_(bundle_.disc.slots()),
        scheduler_(cfg.scheduler, cfg.sched, rng_) {
    cfg_.validate();
  }
  trainer(const trainer&) = delete;
  trainer& operator=(const trainer&) = delete;

  basic_model_bundle<T>& bundle() noexcept { return bundle_; }
  const op_scheduler& scheduler() const noexcept { return scheduler_; }
  rng_t& rng() noexcept { return rng_; }
  const training_config& config() const noexcept { return cfg_; }

  // One alternating update. `forced` bypasses the scheduler (tests, probes).
  step_result step(const std::vector<basic_image<T>>& images, double lr, double elapsed,
                   std::optional<post_process_op> forced = std::nullopt) {
    const std::size_t n = images.size();
    if (n == 0) throw shape_error("empty mini-batch");
    step_result res;

    // (1) fresh watermarks
    std::vector<watermark> marks;
    marks.reserve(n);
    for (std::size_t i = 0; i < n; ++i) marks.push_back(watermark::random(rng_, cfg_.watermark_len));

    // (2) encode
    const feature_map<T> x = from_images(images);
    feature_map<T> xw = bundle_.enc.forward(x, marks, nn::phase::train);
    const auto marked = to_images(xw);

    // (3) post-process
    std::size_t family = 0;
    if (forced) {
      res.op = *forced;
    } else {
      family = scheduler_.choose(rng_);
      res.op = sample_op(static_cast<op_kind>(family), rng_);
    }
    post_process_stage<T> stage;
    const auto processed = stage.forward(marked, res.op);

    // (4) decode
    const feature_map<T> logits = bundle_.dec.forward(from_images(processed), nn::phase::train);
    const auto decoded = detail::logits_of(logits);

    // (5) encoder/decoder objective, discriminator frozen
    const auto d_wm = bundle_.disc.forward(xw, nn::phase::train_frozen);
    res.loss = loss_encdec(images, marked, marks, decoded, d_wm, cfg_.lambda1, cfg_.lambda2);
    if (!std::isfinite(res.loss.total))
      throw numeric_error("non-finite training loss at step " + std::to_string(steps_) + " (" +
                          to_json(res.loss).dump() + ", op " + res.op.label() + ")");

    nn::zero_grads(bundle_.enc.slots());
    nn::zero_grads(bundle_.dec.slots());
    feature_map<T> dlogits(logits.channels, n, 1, 1);
    const double rscale = 2.0 / static_cast<double>(n * cfg_.watermark_len);
    for (std::size_t k = 0; k < logits.channels; ++k)
      for (std::size_t i = 0; i < n; ++i)
        dlogits.data[k * n + i] = static_cast<T>(rscale * (decoded[i].values[k] - marks[i][k]));
    const bool encoder_blocked =
        res.op.kind == op_kind::jpeg && cfg_.jpeg_gradient == jpeg::gradient_mode::zero;
    const feature_map<T> dprocessed = bundle_.dec.backward(dlogits, !encoder_blocked);
    opt_dec_.step(lr);

    if (!encoder_blocked) {
      const auto dmarked = stage.backward(to_images(dprocessed), cfg_.jpeg_gradient);
      feature_map<T> dxw = from_images(dmarked);
      const double pscale = cfg_.lambda1 * 2.0 / static_cast<double>(x.size());
      for (std::size_t i = 0; i < dxw.size(); ++i)
        dxw.data[i] += static_cast<T>(pscale * (static_cast<double>(xw.data[i]) - x.data[i]));
      if (cfg_.lambda2 != 0.0) {
        std::vector<double> dprob(n);
        for (std::size_t i = 0; i < n; ++i) {
          const double p = d_wm[i];
          dprob[i] = (p > kProbClamp && p < 1.0 - kProbClamp) ? -cfg_.lambda2 / ((1.0 - p) * static_cast<double>(n)) : 0.0;
        }
        const auto dadv = bundle_.disc.backward(dprob, true);
        for (std::size_t i = 0; i < dxw.size(); ++i) dxw.data[i] += dadv.data[i];
      }
      bundle_.enc.backward(dxw);
      opt_enc_.step(lr);
    }

    // (6) discriminator on real and (detached) watermarked images
    nn::zero_grads(bundle_.disc.slots());
    const auto d_real = bundle_.disc.forward(x, nn::phase::train);
    {
      std::vector<double> g(n);
      for (std::size_t i = 0; i < n; ++i) {
        const double p = d_real[i];
        g[i] = (p > kProbClamp && p < 1.0 - kProbClamp) ? -1.0 / ((1.0 - p) * static_cast<double>(n)) : 0.0;
      }
      bundle_.disc.backward(g, false);
    }
    const auto d_wm2 = bundle_.disc.forward(xw, nn::phase::train);
    {
      std::vector<double> g(n);
      for (std::size_t i = 0; i < n; ++i) {
        const double p = d_wm2[i];
        g[i] = (p > kProbClamp && p < 1.0 - kProbClamp) ? 1.0 / (p * static_cast<double>(n)) : 0.0;
      }
      bundle_.disc.backward(g, false);
    }
    opt_disc_.step(lr);
    res.loss.discriminator = loss_discriminator(d_real, d_wm2);

    // (7) scheduler feedback
    res.accuracy = mean_bitwise_accuracy(marks, decoded);
    if (!forced) res.sched = scheduler_.observe(res.accuracy, elapsed);
    ++steps_;
    release_caches();
    return res;
  }

 private:
  void release_caches() {
    for (auto& b : bundle_.enc.blocks()) b.release();
    for (auto& b : bundle_.dec.blocks()) b.release();
    for (auto& b : bundle_.disc.blocks()) b.release();
  }

  training_config cfg_;
  rng_t rng_;
  basic_model_bundle<T> bundle_;
  nn::adam<T> opt_enc_, opt_dec_, opt_disc_;
  op_scheduler scheduler_;
  std::size_t steps_ = 0;
};

// ---------------------------------------------------------------------------
// Evaluation used for model selection.

// Mean bitwise accuracy of the decoded watermark after embedding, 8-bit
// quantization and `op`, over all images.
template <typename T>
std::vector<double> bitacc_under(basic_model_bundle<T>& b, const std::vector<basic_image<T>>& marked,
                                 const std::vector<watermark>& marks, const post_process_op& op,
                                 std::size_t chunk = 16) {
  std::vector<double> out;
  out.reserve(marked.size());
  for (std::size_t i0 = 0; i0 < marked.size(); i0 += chunk) {
    const std::size_t i1 = std::min(marked.size(), i0 + chunk);
    std::vector<basic_image<T>> batch;
    for (std::size_t i = i0; i < i1; ++i) batch.push_back(apply_post_process(marked[i], op));
    const auto dec = extract(b, batch);
    for (std::size_t i = i0; i < i1; ++i) out.push_back(bitwise_accuracy(harden(dec[i - i0]), marks[i]));
  }
  return out;
}

template <typename T>
std::vector<basic_image<T>> embed_published(basic_model_bundle<T>& b, const std::vector<basic_image<T>>& images,
                                            const std::vector<watermark>& marks, std::size_t chunk = 16) {
  std::vector<basic_image<T>> out;
  out.reserve(images.size());
  for (std::size_t i0 = 0; i0 < images.size(); i0 += chunk) {
    const std::size_t i1 = std::min(images.size(), i0 + chunk);
    std::vector<basic_image<T>> batch(images.begin() + static_cast<std::ptrdiff_t>(i0),
                                      images.begin() + static_cast<std::ptrdiff_t>(i1));
    std::vector<watermark> wm(marks.begin() + static_cast<std::ptrdiff_t>(i0),
                              marks.begin() + static_cast<std::ptrdiff_t>(i1));
    for (auto& img : embed(b, batch, wm)) out.push_back(quantize8(std::move(img)));
  }
  return out;
}

// Mean bitwise accuracy over identity and the full post-processing grid.
template <typename T>
double grid_accuracy(basic_model_bundle<T>& b, const std::vector<basic_image<T>>& images,
                     const std::vector<watermark>& marks) {
  const auto marked = embed_published(b, images, marks);
  auto ops = full_grid();
  ops.insert(ops.begin(), post_process_op::identity());
  double s = 0;
  std::size_t count = 0;
  for (const auto& op : ops)
    for (double a : bitacc_under(b, marked, marks, op)) {
      s += a;
      ++count;
    }
  return s / static_cast<double>(count);
}

struct training_log_sink {
  std::function<void(const nlohmann::json&)> write;
};

struct training_outcome {
  model_bundle bundle;
  double best_validation = -1;
  std::size_t best_epoch = 0;
  std::size_t steps = 0;
};

// Full loop over cfg.epochs dataset passes. The bundle with the best mean
// post-processed validation accuracy is returned.
inline training_outcome train(const std::vector<image>& train_set, const std::vector<image>& val_set,
                              const training_config& cfg, const training_log_sink& log = {}) {
  cfg.validate();
  if (train_set.empty()) throw parameter_error("training set is empty");
  for (const auto& img : train_set)
    if (img.height() != cfg.image_size || img.width() != cfg.image_size)
      throw shape_error("training images must be resized to image_size first");

  trainer<float> tr(init_params<float>(cfg.seed, cfg.model()), cfg);
  const std::size_t bs = std::min(cfg.batch_size, train_set.size());
  const std::size_t batches = train_set.size() / bs;
  const std::size_t total_steps = cfg.epochs * batches;
  const std::string hash = config_hash(cfg);

  std::vector<image> val = val_set;
  if (cfg.validation_images && val.size() > cfg.validation_images) val.resize(cfg.validation_images);
  rng_t val_rng(cfg.seed ^ 0x0a11da7eULL);
  std::vector<watermark> val_marks;
  for (std::size_t i = 0; i < val.size(); ++i) val_marks.push_back(watermark::random(val_rng, cfg.watermark_len));

  training_outcome out;
  std::string best_bytes;
  auto validate = [&](std::size_t epoch) {
    if (val.empty()) {
      best_bytes = serialize_checkpoint(tr.bundle(), hash);
      out.best_epoch = epoch;
      return;
    }
    const double acc = grid_accuracy(tr.bundle(), val, val_marks);
    if (log.write) log.write({{"validation", acc}, {"epoch", epoch}});
    if (acc > out.best_validation) {
      out.best_validation = acc;
      out.best_epoch = epoch;
      best_bytes = serialize_checkpoint(tr.bundle(), hash);
    }
  };

  std::vector<std::size_t> order(train_set.size());
  std::size_t step = 0;
  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    for (std::size_t i = order.size(); i > 1; --i) std::swap(order[i - 1], order[uniform_index(tr.rng(), i)]);
    for (std::size_t b = 0; b < batches; ++b) {
      std::vector<image> batch;
      batch.reserve(bs);
      for (std::size_t i = 0; i < bs; ++i) batch.push_back(train_set[order[b * bs + i]]);
      const double lr = lr_at(step, total_steps, cfg.lr_initial);
      const double elapsed =
          cfg.epsilon_decay_unit == epsilon_unit::epoch ? static_cast<double>(epoch) : static_cast<double>(step);
      const auto r = tr.step(batch, lr, elapsed);
      if (log.write) {
        nlohmann::json rec = {{"step", step}, {"epoch", epoch}, {"lr", lr}, {"f_t", r.accuracy},
                              {"op", r.op.label()}, {"loss", to_json(r.loss)}};
        if (r.sched) rec["scheduler"] = to_json(*r.sched);
        log.write(rec);
      }
      ++step;
    }
    if (cfg.validate_every && (epoch + 1) % cfg.validate_every == 0 && epoch + 1 < cfg.epochs) validate(epoch + 1);
  }
  validate(cfg.epochs);
  out.steps = step;
  out.bundle = deserialize_checkpoint<float>(best_bytes);
  return out;
}

}  // namespace sfwm
