#pragma once

// Watermark verification: threshold calibration at a false-positive budget,
// verdicts and balanced metrics.

#include <algorithm>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "sfwm/common.hpp"
#include "sfwm/models.hpp"
#include "sfwm/watermark.hpp"

namespace sfwm {

inline constexpr double kDefaultFprBudget = 0.01;

// Largest tau among the observed values and 1.0 such that the share of
// negatives strictly below tau stays within the budget.
inline double calibrate_threshold(const std::vector<double>& negatives, double fpr_budget = kDefaultFprBudget) {
  if (negatives.empty()) throw calibration_error("cannot calibrate on an empty negative set");
  if (!(fpr_budget >= 0.0 && fpr_budget <= 1.0)) throw calibration_error("FPR budget must lie in [0, 1]");
  for (double v : negatives)
    if (!(v >= 0.0 && v <= 1.0)) throw calibration_error("bitwise accuracies must lie in [0, 1]");
  std::vector<double> sorted = negatives;
  std::sort(sorted.begin(), sorted.end());
  const double n = static_cast<double>(sorted.size());
  std::vector<double> candidates = sorted;
  candidates.push_back(1.0);
  double best = -1.0;
  for (double t : candidates) {
    const auto below = static_cast<double>(std::lower_bound(sorted.begin(), sorted.end(), t) - sorted.begin());
    if (below / n <= fpr_budget) best = std::max(best, t);
  }
  return best;  // the smallest candidate always qualifies
}

inline double false_positive_rate(const std::vector<double>& negatives, double tau) {
  if (negatives.empty()) return 0.0;
  std::size_t flagged = 0;
  for (double v : negatives) flagged += v < tau;
  return static_cast<double>(flagged) / static_cast<double>(negatives.size());
}

struct detection_profile {
  std::string identity = "default";
  watermark ground_truth;
  double threshold = 1.0;
  double fpr_budget = kDefaultFprBudget;
  std::string config_hash;
  std::size_t calibration_negatives = 0;
};

inline nlohmann::json to_json(const detection_profile& p) {
  return {{"format", "sfwm-profile"},
          {"version", 1},
          {"identity", p.identity},
          {"ground_truth", p.ground_truth.to_string()},
          {"threshold", p.threshold},
          {"fpr_budget", p.fpr_budget},
          {"config_hash", p.config_hash},
          {"calibration_negatives", p.calibration_negatives}};
}

inline detection_profile profile_from_json(const nlohmann::json& j) {
  if (j.value("format", "") != "sfwm-profile") throw format_error("not a detection profile");
  detection_profile p;
  p.identity = j.at("identity").get<std::string>();
  const auto gt = j.at("ground_truth").get<std::string>();
  p.ground_truth = watermark::parse(gt, gt.size());
  p.threshold = j.at("threshold").get<double>();
  if (!(p.threshold >= 0.0 && p.threshold <= 1.0)) throw format_error("profile threshold outside [0, 1]");
  p.fpr_budget = j.value("fpr_budget", kDefaultFprBudget);
  p.config_hash = j.at("config_hash").get<std::string>();
  p.calibration_negatives = j.value("calibration_negatives", std::size_t(0));
  return p;
}

enum class verdict { real, fake };

inline const char* verdict_name(verdict v) { return v == verdict::fake ? "fake" : "real"; }

// Strict rule: fake iff bitacc < tau.
inline verdict decide(double bitacc, double tau) { return bitacc < tau ? verdict::fake : verdict::real; }

struct detection {
  verdict result = verdict::real;
  double bitacc = 0;
  watermark extracted;
};

// Decodes images of possibly different shapes, batching runs of equal shape.
template <typename T>
std::vector<watermark_logits> extract_batched(basic_model_bundle<T>& models, const std::vector<basic_image<T>>& images,
                                              std::size_t chunk = 16) {
  std::vector<watermark_logits> out;
  out.reserve(images.size());
  std::size_t i0 = 0;
  while (i0 < images.size()) {
    std::size_t i1 = i0 + 1;
    while (i1 < images.size() && i1 - i0 < chunk && images[i1].same_shape(images[i0])) ++i1;
    std::vector<basic_image<T>> batch(images.begin() + static_cast<std::ptrdiff_t>(i0),
                                      images.begin() + static_cast<std::ptrdiff_t>(i1));
    for (auto& l : extract(models, batch)) out.push_back(std::move(l));
    i0 = i1;
  }
  return out;
}

template <typename T>
std::vector<detection> detect(basic_model_bundle<T>& models, const std::vector<basic_image<T>>& images,
                              const detection_profile& profile) {
  if (profile.ground_truth.size() != models.config.watermark_bits)
    throw shape_error("profile watermark length does not match the model");
  std::vector<detection> out;
  const auto logits = extract_batched(models, images);
  for (const auto& l : logits) {
    detection d;
    d.extracted = harden(l);
    d.bitacc = bitwise_accuracy(d.extracted, profile.ground_truth);
    d.result = decide(d.bitacc, profile.threshold);
    out.push_back(std::move(d));
  }
  return out;
}

struct metrics_report {
  std::optional<double> acc;  // empty when one class is missing
  std::optional<double> fpr;  // empty without negatives
  std::optional<double> fnr;  // empty without positives
  std::size_t negatives = 0, positives = 0;
  std::size_t false_positives = 0, false_negatives = 0;
  std::size_t balanced_per_class = 0;
};

inline nlohmann::json to_json(const metrics_report& m) {
  auto opt = [](const std::optional<double>& v) { return v ? nlohmann::json(*v) : nlohmann::json(nullptr); };
  return {{"acc", opt(m.acc)},
          {"fpr", opt(m.fpr)},
          {"fnr", opt(m.fnr)},
          {"counts",
           {{"negatives", m.negatives},
            {"positives", m.positives},
            {"false_positives", m.false_positives},
            {"false_negatives", m.false_negatives},
            {"balanced_per_class", m.balanced_per_class}}}};
}

// labels: true marks a positive (fake) example. ACC is measured after
// subsampling the majority class, without replacement, to the minority size.
inline metrics_report compute_metrics(const std::vector<verdict>& verdicts, const std::vector<bool>& labels,
                                      rng_t& rng) {
  if (verdicts.size() != labels.size()) throw shape_error("verdict and label counts differ");
  metrics_report m;
  std::vector<std::size_t> neg, pos;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    const bool flagged = verdicts[i] == verdict::fake;
    if (labels[i]) {
      pos.push_back(i);
      m.false_negatives += !flagged;
    } else {
      neg.push_back(i);
      m.false_positives += flagged;
    }
  }
  m.negatives = neg.size();
  m.positives = pos.size();
  if (!neg.empty()) m.fpr = static_cast<double>(m.false_positives) / static_cast<double>(neg.size());
  if (!pos.empty()) m.fnr = static_cast<double>(m.false_negatives) / static_cast<double>(pos.size());
  if (neg.empty() || pos.empty()) return m;

  auto& major = neg.size() > pos.size() ? neg : pos;
  const std::size_t k = std::min(neg.size(), pos.size());
  for (std::size_t i = 0; i < k; ++i) std::swap(major[i], major[i + uniform_index(rng, major.size() - i)]);
  major.resize(k);
  std::size_t correct = 0;
  for (auto idx : neg) correct += verdicts[idx] == verdict::real;
  for (auto idx : pos) correct += verdicts[idx] == verdict::fake;
  m.balanced_per_class = k;
  m.acc = static_cast<double>(correct) / static_cast<double>(2 * k);
  return m;
}

// Raises calibration_error when a class is missing, for callers that need ACC.
inline double require_acc(const metrics_report& m) {
  if (!m.acc) throw calibration_error("ACC needs both positive and negative examples");
  return *m.acc;
}

}  // namespace sfwm
