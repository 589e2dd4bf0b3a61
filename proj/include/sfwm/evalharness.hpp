#pragma once

// Experiments: robustness sweep, manipulation proxies, detector evaluation,
// the adaptive attacker protocol and the ablation suite.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <functional>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "sfwm/common.hpp"
#include "sfwm/detector.hpp"
#include "sfwm/image.hpp"
#include "sfwm/imageops.hpp"
#include "sfwm/models.hpp"
#include "sfwm/postprocess.hpp"
#include "sfwm/trainer.hpp"
#include "sfwm/watermark.hpp"

namespace sfwm {

inline double mean_of(const std::vector<double>& v) {
  if (v.empty()) return 0.0;
  double s = 0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

// Lower median for even counts.
inline double median_of(std::vector<double> v) {
  if (v.empty()) return 0.0;
  const std::size_t mid = (v.size() - 1) / 2;
  std::nth_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid), v.end());
  return v[mid];
}

// ---------------------------------------------------------------------------
// Manipulation proxies. They stand in for face-manipulation generators and
// are kept apart from the training post-processing set.

enum class proxy_kind { region_replace, piecewise_warp, foreign_reencode };

struct manipulation_proxy {
  proxy_kind kind = proxy_kind::region_replace;
  double param = 1.0;  // replaced side fraction, or warp magnitude in pixels

  static manipulation_proxy region_replace(double fraction) { return {proxy_kind::region_replace, fraction}; }
  static manipulation_proxy piecewise_warp(double magnitude) { return {proxy_kind::piecewise_warp, magnitude}; }
  static manipulation_proxy foreign_reencode() { return {proxy_kind::foreign_reencode, 0.0}; }

  std::string label() const {
    char buf[64];
    switch (kind) {
      case proxy_kind::region_replace: std::snprintf(buf, sizeof buf, "RegionReplace(%.2f)", param); break;
      case proxy_kind::piecewise_warp: std::snprintf(buf, sizeof buf, "PiecewiseWarp(%.2f)", param); break;
      case proxy_kind::foreign_reencode: std::snprintf(buf, sizeof buf, "ForeignReencode"); break;
    }
    return buf;
  }
};

// Replaces the centered fraction x fraction window with the same window of
// `donor` (resized to the image's shape first).
inline image region_replace(const image& img, const image& donor, double fraction) {
  if (!(fraction >= 0.0 && fraction <= 1.0)) throw parameter_error("replace fraction must lie in [0, 1]");
  image out = img;
  const std::size_t h = img.height(), w = img.width();
  const std::size_t rh = static_cast<std::size_t>(std::floor(fraction * static_cast<double>(h) + 1e-9));
  const std::size_t rw = static_cast<std::size_t>(std::floor(fraction * static_cast<double>(w) + 1e-9));
  if (rh == 0 || rw == 0) return out;
  const image src = donor.same_shape(img) ? donor : resize_to(donor, h, w);
  const std::size_t top = (h - rh) / 2, left = (w - rw) / 2;
  for (std::size_t c = 0; c < kChannels; ++c)
    for (std::size_t y = top; y < top + rh; ++y)
      for (std::size_t x = left; x < left + rw; ++x) out.at(c, y, x) = src.at(c, y, x);
  return out;
}

// Random smooth displacement: a 4x4 grid of offsets in [-magnitude,
// magnitude] pixels, bilinearly interpolated, sampled with edge clamping.
inline image piecewise_warp(const image& img, double magnitude, rng_t& rng) {
  if (!(magnitude >= 0.0)) throw parameter_error("warp magnitude must be non-negative");
  constexpr std::size_t G = 4;
  double dx[G][G], dy[G][G];
  for (std::size_t i = 0; i < G; ++i)
    for (std::size_t j = 0; j < G; ++j) {
      dx[i][j] = (2 * uniform01(rng) - 1) * magnitude;
      dy[i][j] = (2 * uniform01(rng) - 1) * magnitude;
    }
  const std::size_t h = img.height(), w = img.width();
  auto field = [&](double (&f)[G][G], double gy, double gx) {
    const std::size_t y0 = std::min<std::size_t>(static_cast<std::size_t>(gy), G - 2);
    const std::size_t x0 = std::min<std::size_t>(static_cast<std::size_t>(gx), G - 2);
    const double ty = gy - static_cast<double>(y0), tx = gx - static_cast<double>(x0);
    return (1 - ty) * ((1 - tx) * f[y0][x0] + tx * f[y0][x0 + 1]) + ty * ((1 - tx) * f[y0 + 1][x0] + tx * f[y0 + 1][x0 + 1]);
  };
  auto sample = [&](std::size_t c, double y, double x) {
    y = std::clamp(y, 0.0, static_cast<double>(h - 1));
    x = std::clamp(x, 0.0, static_cast<double>(w - 1));
    const std::size_t y0 = std::min(static_cast<std::size_t>(y), h - 2), x0 = std::min(static_cast<std::size_t>(x), w - 2);
    const double ty = y - static_cast<double>(y0), tx = x - static_cast<double>(x0);
    return (1 - ty) * ((1 - tx) * img.at(c, y0, x0) + tx * img.at(c, y0, x0 + 1)) +
           ty * ((1 - tx) * img.at(c, y0 + 1, x0) + tx * img.at(c, y0 + 1, x0 + 1));
  };
  image out(h, w);
  for (std::size_t y = 0; y < h; ++y)
    for (std::size_t x = 0; x < w; ++x) {
      const double gy = static_cast<double>(y) / static_cast<double>(h - 1) * (G - 1);
      const double gx = static_cast<double>(x) / static_cast<double>(w - 1) * (G - 1);
      const double sy = static_cast<double>(y) + field(dy, gy, gx), sx = static_cast<double>(x) + field(dx, gy, gx);
      for (std::size_t c = 0; c < kChannels; ++c) out.at(c, y, x) = static_cast<float>(sample(c, sy, sx));
    }
  return quantize8(std::move(out));
}

// Passes images through a different model pair: decode with its decoder,
// re-embed that message with its encoder, publish as 8-bit.
inline std::vector<image> foreign_reencode(model_bundle& foreign, const std::vector<image>& images) {
  std::vector<watermark> msgs;
  for (const auto& l : extract_batched(foreign, images)) msgs.push_back(harden(l));
  return embed_published(foreign, images, msgs);
}

// Applies a proxy to every image; donors for region replacement are the
// next image in the (unwatermarked) originals list.
inline std::vector<image> apply_proxy(const std::vector<image>& marked, const std::vector<image>& originals,
                                      const manipulation_proxy& proxy, std::uint64_t seed,
                                      model_bundle* foreign = nullptr) {
  std::vector<image> out;
  switch (proxy.kind) {
    case proxy_kind::region_replace:
      if (originals.size() < 2) throw parameter_error("region replacement needs at least two images");
      for (std::size_t i = 0; i < marked.size(); ++i)
        out.push_back(region_replace(marked[i], originals[(i + 1) % originals.size()], proxy.param));
      break;
    case proxy_kind::piecewise_warp: {
      rng_t rng(seed);
      for (const auto& img : marked) out.push_back(piecewise_warp(img, proxy.param, rng));
      break;
    }
    case proxy_kind::foreign_reencode:
      if (!foreign) throw parameter_error("ForeignReencode needs a foreign model");
      out = foreign_reencode(*foreign, marked);
      break;
  }
  return out;
}

// ---------------------------------------------------------------------------
// Bit accuracies of watermarked images under post-processing.

inline std::vector<post_process_op> evaluation_ops() {
  auto ops = full_grid();
  ops.insert(ops.begin(), post_process_op::identity());
  return ops;
}

inline std::vector<double> bitaccs_of(model_bundle& b, const std::vector<image>& images, const watermark& gt) {
  std::vector<double> out;
  for (const auto& l : extract_batched(b, images)) out.push_back(bitwise_accuracy(harden(l), gt));
  return out;
}

inline std::vector<image> watermark_all(model_bundle& b, const std::vector<image>& images, const watermark& gt) {
  return embed_published(b, images, std::vector<watermark>(images.size(), gt));
}

// Negative examples: each image watermarked, published, then passed through
// identity and every grid operation.
inline std::vector<double> negative_bitaccs(model_bundle& b, const std::vector<image>& marked, const watermark& gt) {
  std::vector<double> out;
  for (const auto& op : evaluation_ops()) {
    std::vector<image> processed;
    for (const auto& img : marked) processed.push_back(apply_post_process(img, op));
    for (double a : bitaccs_of(b, processed, gt)) out.push_back(a);
  }
  return out;
}

inline detection_profile calibrate_profile(model_bundle& b, const std::vector<image>& val, const watermark& gt,
                                           const std::string& config_hash, double budget = kDefaultFprBudget,
                                           std::vector<double>* negatives_out = nullptr) {
  const auto neg = negative_bitaccs(b, watermark_all(b, val, gt), gt);
  detection_profile p;
  p.ground_truth = gt;
  p.threshold = calibrate_threshold(neg, budget);
  p.fpr_budget = budget;
  p.config_hash = config_hash;
  p.calibration_negatives = neg.size();
  if (negatives_out) *negatives_out = neg;
  return p;
}

// ---------------------------------------------------------------------------
// Robustness sweep.

struct sweep_row {
  post_process_op op;
  double mean_bitacc = 0;
  double median_bitacc = 0;
  double mean_ssim = 0;    // processed watermarked vs processed original
  double real_rate = -1;   // share judged real at tau; -1 without a profile
};

struct sweep_report {
  std::vector<sweep_row> rows;  // identity first, then the grid
  double mean_ssim_watermarked = 0;
  double grid_mean_bitacc = 0;  // over identity and every grid row
  std::optional<double> threshold;
  std::size_t images = 0;
};

inline sweep_report robustness_sweep(model_bundle& b, const std::vector<image>& images, const watermark& gt,
                                     std::optional<double> tau = std::nullopt) {
  sweep_report rep;
  rep.threshold = tau;
  rep.images = images.size();
  const auto marked = watermark_all(b, images, gt);
  std::vector<double> ss;
  for (std::size_t i = 0; i < images.size(); ++i) ss.push_back(ssim(images[i], marked[i]));
  rep.mean_ssim_watermarked = mean_of(ss);
  double total = 0;
  for (const auto& op : evaluation_ops()) {
    std::vector<image> pm, po;
    for (std::size_t i = 0; i < images.size(); ++i) {
      pm.push_back(apply_post_process(marked[i], op));
      po.push_back(apply_post_process(images[i], op));
    }
    const auto acc = bitaccs_of(b, pm, gt);
    sweep_row row;
    row.op = op;
    row.mean_bitacc = mean_of(acc);
    row.median_bitacc = median_of(acc);
    std::vector<double> rs;
    for (std::size_t i = 0; i < pm.size(); ++i) rs.push_back(ssim(po[i], pm[i]));
    row.mean_ssim = mean_of(rs);
    if (tau) {
      std::size_t real = 0;
      for (double a : acc) real += decide(a, *tau) == verdict::real;
      row.real_rate = static_cast<double>(real) / static_cast<double>(acc.size());
    }
    total += row.mean_bitacc;
    rep.rows.push_back(row);
  }
  rep.grid_mean_bitacc = total / static_cast<double>(rep.rows.size());
  return rep;
}

inline const sweep_row& find_row(const sweep_report& r, const post_process_op& op) {
  for (const auto& row : r.rows)
    if (row.op.kind == op.kind && std::abs(row.op.param - op.param) < 1e-9) return row;
  throw parameter_error("operation not in sweep: " + op.label());
}

inline double family_mean(const sweep_report& r, op_kind kind) {
  double s = 0;
  std::size_t n = 0;
  for (const auto& row : r.rows)
    if (row.op.kind == kind) {
      s += row.mean_bitacc;
      ++n;
    }
  return n ? s / static_cast<double>(n) : 0.0;
}

inline nlohmann::json to_json(const sweep_report& r) {
  nlohmann::json rows = nlohmann::json::array();
  for (const auto& row : r.rows) {
    nlohmann::json j = {{"op", op_name(row.op.kind)},
                        {"param", row.op.param},
                        {"label", row.op.label()},
                        {"mean_bitacc", row.mean_bitacc},
                        {"median_bitacc", row.median_bitacc},
                        {"mean_ssim", row.mean_ssim}};
    if (row.real_rate >= 0) j["real_rate"] = row.real_rate;
    rows.push_back(j);
  }
  nlohmann::json out = {{"report", "robustness_sweep"},
                        {"images", r.images},
                        {"mean_ssim_watermarked", r.mean_ssim_watermarked},
                        {"grid_mean_bitacc", r.grid_mean_bitacc},
                        {"rows", rows}};
  if (r.threshold) out["threshold"] = *r.threshold;
  return out;
}

inline std::string to_csv(const sweep_report& r) {
  std::ostringstream os;
  os << "op,param,mean_bitacc,median_bitacc,mean_ssim,real_rate\n";
  char buf[160];
  for (const auto& row : r.rows) {
    std::snprintf(buf, sizeof buf, "%s,%g,%.6f,%.6f,%.6f,%s\n", op_name(row.op.kind), row.op.param, row.mean_bitacc,
                  row.median_bitacc, row.mean_ssim, row.real_rate >= 0 ? std::to_string(row.real_rate).c_str() : "");
    os << buf;
  }
  return os.str();
}

// Bit accuracy against JPEG quality as a standalone SVG line chart.
inline std::string jpeg_curve_svg(const sweep_report& r) {
  std::vector<std::pair<double, double>> pts;
  for (const auto& row : r.rows)
    if (row.op.kind == op_kind::jpeg) pts.emplace_back(row.op.param, row.mean_bitacc);
  const double W = 480, H = 320, L = 60, R = 20, T = 20, B = 50;
  auto px = [&](double q) { return L + (q - 10) / 90.0 * (W - L - R); };
  auto py = [&](double a) { return T + (1.0 - a) / 0.5 * (H - T - B); };  // y axis 0.5..1.0
  std::ostringstream os;
  char buf[200];
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H << "\">\n";
  os << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  std::snprintf(buf, sizeof buf, "<line x1=\"%g\" y1=\"%g\" x2=\"%g\" y2=\"%g\" stroke=\"black\"/>\n", L, H - B, W - R, H - B);
  os << buf;
  std::snprintf(buf, sizeof buf, "<line x1=\"%g\" y1=\"%g\" x2=\"%g\" y2=\"%g\" stroke=\"black\"/>\n", L, T, L, H - B);
  os << buf;
  for (int q = 10; q <= 100; q += 10) {
    std::snprintf(buf, sizeof buf, "<text x=\"%.1f\" y=\"%g\" font-size=\"11\" text-anchor=\"middle\">%d</text>\n", px(q),
                  H - B + 16, q);
    os << buf;
  }
  for (int i = 0; i <= 5; ++i) {
    const double a = 0.5 + 0.1 * i;
    std::snprintf(buf, sizeof buf, "<text x=\"%g\" y=\"%.1f\" font-size=\"11\" text-anchor=\"end\">%.1f</text>\n", L - 6,
                  py(a) + 4, a);
    os << buf;
  }
  std::snprintf(buf, sizeof buf, "<text x=\"%g\" y=\"%g\" font-size=\"12\" text-anchor=\"middle\">JPEG quality</text>\n",
                (L + W - R) / 2, H - 12);
  os << buf;
  std::snprintf(buf, sizeof buf,
                "<text x=\"14\" y=\"%g\" font-size=\"12\" text-anchor=\"middle\" transform=\"rotate(-90 14 %g)\">bitwise "
                "accuracy</text>\n",
                (T + H - B) / 2, (T + H - B) / 2);
  os << buf;
  os << "<polyline fill=\"none\" stroke=\"#1f5fa8\" stroke-width=\"2\" points=\"";
  for (const auto& [q, a] : pts) {
    std::snprintf(buf, sizeof buf, "%.1f,%.1f ", px(q), py(std::max(0.5, a)));
    os << buf;
  }
  os << "\"/>\n";
  for (const auto& [q, a] : pts) {
    std::snprintf(buf, sizeof buf, "<circle cx=\"%.1f\" cy=\"%.1f\" r=\"3\" fill=\"#1f5fa8\"/>\n", px(q), py(std::max(0.5, a)));
    os << buf;
  }
  os << "</svg>\n";
  return os.str();
}

// ---------------------------------------------------------------------------
// Fragility probe.

struct fragility_report {
  manipulation_proxy proxy;
  std::vector<double> bitaccs;
  double mean_bitacc = 0, median_bitacc = 0;
  double detection_rate = -1;  // share judged fake at tau
};

inline fragility_report fragility_probe(model_bundle& b, const std::vector<image>& images, const watermark& gt,
                                        const manipulation_proxy& proxy, std::optional<double> tau,
                                        std::uint64_t seed = 0, model_bundle* foreign = nullptr) {
  fragility_report rep;
  rep.proxy = proxy;
  const auto marked = watermark_all(b, images, gt);
  const auto fakes = apply_proxy(marked, images, proxy, seed, foreign);
  rep.bitaccs = bitaccs_of(b, fakes, gt);
  rep.mean_bitacc = mean_of(rep.bitaccs);
  rep.median_bitacc = median_of(rep.bitaccs);
  if (tau) {
    std::size_t fake = 0;
    for (double a : rep.bitaccs) fake += decide(a, *tau) == verdict::fake;
    rep.detection_rate = static_cast<double>(fake) / static_cast<double>(rep.bitaccs.size());
  }
  return rep;
}

inline nlohmann::json to_json(const fragility_report& r) {
  nlohmann::json j = {{"report", "fragility_probe"},
                      {"proxy", r.proxy.label()},
                      {"note", "manipulation proxy standing in for face-manipulation generators"},
                      {"mean_bitacc", r.mean_bitacc},
                      {"median_bitacc", r.median_bitacc},
                      {"bitaccs", r.bitaccs}};
  if (r.detection_rate >= 0) j["detection_rate"] = r.detection_rate;
  return j;
}

// ---------------------------------------------------------------------------
// Detector evaluation on a test split: negatives are watermarked images under
// identity and every grid operation, positives are watermarked images whose
// content was replaced by a proxy.

struct detector_evaluation {
  detection_profile profile;
  metrics_report metrics;
  double calibration_fpr = 0;
  double test_fpr = 0;
  sweep_report sweep;
};

inline metrics_report score(const std::vector<double>& negatives, const std::vector<double>& positives, double tau,
                            std::uint64_t seed) {
  std::vector<verdict> v;
  std::vector<bool> labels;
  for (double a : negatives) {
    v.push_back(decide(a, tau));
    labels.push_back(false);
  }
  for (double a : positives) {
    v.push_back(decide(a, tau));
    labels.push_back(true);
  }
  rng_t rng(seed);
  return compute_metrics(v, labels, rng);
}

inline detector_evaluation evaluate_detector(model_bundle& b, const std::vector<image>& val,
                                             const std::vector<image>& test, const watermark& gt,
                                             const std::string& config_hash, std::uint64_t seed,
                                             const manipulation_proxy& fake_proxy = manipulation_proxy::region_replace(1.0)) {
  detector_evaluation ev;
  std::vector<double> cal;
  ev.profile = calibrate_profile(b, val, gt, config_hash, kDefaultFprBudget, &cal);
  ev.calibration_fpr = false_positive_rate(cal, ev.profile.threshold);
  const auto marked = watermark_all(b, test, gt);
  const auto neg = negative_bitaccs(b, marked, gt);
  ev.test_fpr = false_positive_rate(neg, ev.profile.threshold);
  const auto pos = bitaccs_of(b, apply_proxy(marked, test, fake_proxy, seed), gt);
  ev.metrics = score(neg, pos, ev.profile.threshold, seed);
  ev.sweep = robustness_sweep(b, test, gt, ev.profile.threshold);
  return ev;
}

// ---------------------------------------------------------------------------
// Adaptive attacker: decode the defender-watermarked image with the
// attacker's decoder, manipulate it, re-embed the decoded message with the
// attacker's encoder, then run the defender's detector.

struct attack_report {
  metrics_report metrics;
  std::vector<double> attacked_bitaccs;
  double threshold = 0;
  std::string manipulation;
};

inline attack_report adaptive_attack_eval(model_bundle& defender, model_bundle& attacker,
                                          const detection_profile& profile, const std::vector<image>& test,
                                          std::uint64_t seed,
                                          const manipulation_proxy& proxy = manipulation_proxy::region_replace(1.0)) {
  attack_report rep;
  rep.threshold = profile.threshold;
  rep.manipulation = proxy.label();
  const auto& gt = profile.ground_truth;
  const auto marked = watermark_all(defender, test, gt);
  std::vector<watermark> stolen;
  for (const auto& l : extract_batched(attacker, marked)) stolen.push_back(harden(l));
  const auto manipulated = apply_proxy(marked, test, proxy, seed);
  const auto forged = embed_published(attacker, manipulated, stolen);
  rep.attacked_bitaccs = bitaccs_of(defender, forged, gt);
  const auto neg = negative_bitaccs(defender, marked, gt);
  rep.metrics = score(neg, rep.attacked_bitaccs, profile.threshold, seed);
  return rep;
}

inline nlohmann::json to_json(const attack_report& r) {
  return {{"report", "adaptive_attack"},
          {"threshold", r.threshold},
          {"manipulation", r.manipulation},
          {"note", "manipulation applied between extraction and re-embedding; proxy for face-manipulation generators"},
          {"metrics", to_json(r.metrics)},
          {"mean_attacked_bitacc", mean_of(r.attacked_bitaccs)}};
}

// ---------------------------------------------------------------------------
// Ablation suite.

struct ablation_variant {
  std::string name;
  scheduler_kind scheduler;
  jpeg::gradient_mode jpeg_gradient;
};

inline std::vector<ablation_variant> ablation_variants() {
  return {{"full", scheduler_kind::rl, jpeg::gradient_mode::surrogate},
          {"no_rl", scheduler_kind::random, jpeg::gradient_mode::surrogate},
          {"no_jpeg", scheduler_kind::rl, jpeg::gradient_mode::zero},
          {"no_rl_jpeg", scheduler_kind::random, jpeg::gradient_mode::zero}};
}

inline training_config variant_config(training_config base, const ablation_variant& v, std::uint64_t seed) {
  base.scheduler = v.scheduler;
  base.jpeg_gradient = v.jpeg_gradient;
  base.seed = seed;
  return base;
}

struct ablation_run {
  std::string variant;
  std::uint64_t seed = 0;
  double acc = 0, test_fpr = 0, calibration_fpr = 0, threshold = 0;
  double jpeg_row = 0;   // mean bit accuracy over the JPEG grid
  double grid_mean = 0;  // over identity and the whole grid
};

struct ablation_report {
  std::vector<ablation_run> runs;

  std::vector<ablation_run> of(const std::string& variant) const {
    std::vector<ablation_run> out;
    for (const auto& r : runs)
      if (r.variant == variant) out.push_back(r);
    return out;
  }
  double mean(const std::string& variant, double ablation_run::*field) const {
    const auto rs = of(variant);
    double s = 0;
    for (const auto& r : rs) s += r.*field;
    return rs.empty() ? 0.0 : s / static_cast<double>(rs.size());
  }
};

using train_function = std::function<model_bundle(const training_config&)>;

inline ablation_report ablation_suite(const train_function& train_fn, const training_config& base,
                                      const std::vector<std::uint64_t>& seeds, const std::vector<image>& val,
                                      const std::vector<image>& test, const watermark& gt) {
  ablation_report rep;
  for (const auto& v : ablation_variants())
    for (auto seed : seeds) {
      const auto cfg = variant_config(base, v, seed);
      auto bundle = train_fn(cfg);
      const auto ev = evaluate_detector(bundle, val, test, gt, config_hash(cfg), seed);
      ablation_run r;
      r.variant = v.name;
      r.seed = seed;
      r.acc = require_acc(ev.metrics);
      r.test_fpr = ev.test_fpr;
      r.calibration_fpr = ev.calibration_fpr;
      r.threshold = ev.profile.threshold;
      r.jpeg_row = family_mean(ev.sweep, op_kind::jpeg);
      r.grid_mean = ev.sweep.grid_mean_bitacc;
      rep.runs.push_back(r);
    }
  return rep;
}

inline nlohmann::json to_json(const ablation_report& r) {
  nlohmann::json runs = nlohmann::json::array(), summary = nlohmann::json::object();
  for (const auto& x : r.runs)
    runs.push_back({{"variant", x.variant},
                    {"seed", x.seed},
                    {"acc", x.acc},
                    {"test_fpr", x.test_fpr},
                    {"calibration_fpr", x.calibration_fpr},
                    {"threshold", x.threshold},
                    {"jpeg_row_bitacc", x.jpeg_row},
                    {"grid_mean_bitacc", x.grid_mean}});
  for (const auto& v : ablation_variants())
    summary[v.name] = {{"mean_acc", r.mean(v.name, &ablation_run::acc)},
                       {"mean_jpeg_row_bitacc", r.mean(v.name, &ablation_run::jpeg_row)},
                       {"mean_grid_bitacc", r.mean(v.name, &ablation_run::grid_mean)}};
  return {{"report", "ablation"}, {"runs", runs}, {"summary", summary}};
}

}  // namespace sfwm
