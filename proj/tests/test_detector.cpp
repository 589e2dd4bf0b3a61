#include <gtest/gtest.h>

#include <cmath>

#include "sfwm/detector.hpp"
#include "sfwm/synthetic.hpp"

using namespace sfwm;

TEST(Calibration, SmallExamples) {
  const std::vector<double> neg = {0.9, 0.95, 1.0, 1.0};
  EXPECT_EQ(calibrate_threshold(neg, 0.0), 0.9);
  EXPECT_EQ(calibrate_threshold(neg, 0.25), 0.95);
  EXPECT_EQ(calibrate_threshold(neg, 0.49), 0.95);
  EXPECT_EQ(calibrate_threshold(neg, 0.5), 1.0);
  EXPECT_EQ(calibrate_threshold({1.0, 1.0}, 0.0), 1.0);
  EXPECT_EQ(calibrate_threshold({0.5}, 0.01), 0.5);
}

TEST(Calibration, HundredNegativesOnePercent) {
  std::vector<double> neg;
  for (int i = 0; i < 100; ++i) neg.push_back(i / 100.0);
  const double tau = calibrate_threshold(neg, 0.01);
  EXPECT_EQ(tau, 0.01);
  EXPECT_EQ(false_positive_rate(neg, tau), 0.01);
}

TEST(Calibration, MatchesBruteForce) {
  rng_t rng(1);
  for (int trial = 0; trial < 300; ++trial) {
    const std::size_t n = 1 + uniform_index(rng, 60);
    std::vector<double> neg;
    for (std::size_t i = 0; i < n; ++i) neg.push_back(static_cast<double>(uniform_index(rng, 31)) / 30.0);
    const double budget = uniform01(rng) * 0.2;
    double best = -1;
    std::vector<double> cands = neg;
    cands.push_back(1.0);
    for (double t : cands) {
      std::size_t below = 0;
      for (double v : neg) below += v < t;
      if (static_cast<double>(below) / static_cast<double>(n) <= budget) best = std::max(best, t);
    }
    const double tau = calibrate_threshold(neg, budget);
    ASSERT_EQ(tau, best);
    ASSERT_LE(false_positive_rate(neg, tau), budget);
  }
}

TEST(Calibration, MonotoneInBudget) {
  rng_t rng(2);
  std::vector<double> neg;
  for (int i = 0; i < 200; ++i) neg.push_back(0.7 + 0.3 * uniform01(rng));
  double prev = 0;
  for (double b = 0; b <= 1.0; b += 0.05) {
    const double tau = calibrate_threshold(neg, b);
    EXPECT_GE(tau, prev);
    prev = tau;
  }
}

TEST(Calibration, Errors) {
  EXPECT_THROW(calibrate_threshold({}, 0.01), calibration_error);
  EXPECT_THROW(calibrate_threshold({0.5}, -0.1), calibration_error);
  EXPECT_THROW(calibrate_threshold({0.5}, 1.5), calibration_error);
  EXPECT_THROW(calibrate_threshold({1.2}, 0.01), calibration_error);
  EXPECT_THROW(calibrate_threshold({std::nan("")}, 0.01), calibration_error);
}

TEST(Decision, StrictBoundary) {
  EXPECT_EQ(decide(0.9, 0.9), verdict::real);
  EXPECT_EQ(decide(std::nextafter(0.9, 0.0), 0.9), verdict::fake);
  EXPECT_EQ(decide(1.0, 1.0), verdict::real);
  EXPECT_EQ(decide(0.0, 0.0), verdict::real);
  EXPECT_STREQ(verdict_name(verdict::fake), "fake");
}

TEST(Metrics, BalancedExample) {
  // 4 negatives (1 flagged) and 4 positives (3 flagged).
  const std::vector<verdict> v = {verdict::real, verdict::real, verdict::fake, verdict::real,
                                  verdict::fake, verdict::fake, verdict::real, verdict::fake};
  const std::vector<bool> labels = {false, false, false, false, true, true, true, true};
  rng_t rng(3);
  const auto m = compute_metrics(v, labels, rng);
  EXPECT_DOUBLE_EQ(*m.acc, 6.0 / 8.0);
  EXPECT_DOUBLE_EQ(*m.fpr, 0.25);
  EXPECT_DOUBLE_EQ(*m.fnr, 0.25);
  EXPECT_EQ(m.balanced_per_class, 4u);
  EXPECT_EQ(m.false_positives, 1u);
  EXPECT_EQ(m.false_negatives, 1u);
}

TEST(Metrics, SubsamplingIsUnbiased) {
  // 10 negatives with 3 flagged, 4 positives with 1 missed: E[ACC] = (0.7 + 0.75) / 2.
  std::vector<verdict> v;
  std::vector<bool> labels;
  for (int i = 0; i < 10; ++i) {
    v.push_back(i < 3 ? verdict::fake : verdict::real);
    labels.push_back(false);
  }
  for (int i = 0; i < 4; ++i) {
    v.push_back(i < 1 ? verdict::real : verdict::fake);
    labels.push_back(true);
  }
  rng_t rng(4);
  const int trials = 20000;
  double s = 0, s2 = 0;
  for (int t = 0; t < trials; ++t) {
    const auto m = compute_metrics(v, labels, rng);
    ASSERT_EQ(m.balanced_per_class, 4u);
    ASSERT_DOUBLE_EQ(*m.fpr, 0.3);
    s += *m.acc;
    s2 += *m.acc * *m.acc;
  }
  const double mean = s / trials, sd = std::sqrt(s2 / trials - mean * mean);
  EXPECT_NEAR(mean, 0.725, 5 * sd / std::sqrt(trials));
}

TEST(Metrics, SeededAndMissingClasses) {
  std::vector<verdict> v(12, verdict::real);
  v[0] = verdict::fake;
  v[11] = verdict::fake;
  std::vector<bool> labels(12, false);
  labels[11] = true;
  labels[10] = true;
  rng_t a(5), b(5);
  EXPECT_EQ(*compute_metrics(v, labels, a).acc, *compute_metrics(v, labels, b).acc);

  const auto neg_only = compute_metrics({verdict::fake, verdict::real}, {false, false}, a);
  EXPECT_FALSE(neg_only.acc.has_value());
  EXPECT_FALSE(neg_only.fnr.has_value());
  EXPECT_DOUBLE_EQ(*neg_only.fpr, 0.5);
  EXPECT_THROW(require_acc(neg_only), calibration_error);
  EXPECT_TRUE(to_json(neg_only).at("acc").is_null());
  EXPECT_THROW(compute_metrics({verdict::real}, {}, a), shape_error);
}

TEST(Profile, JsonRoundTrip) {
  detection_profile p;
  p.identity = "alice";
  rng_t rng(6);
  p.ground_truth = watermark::random(rng, 30);
  p.threshold = 0.9333333333333333;
  p.fpr_budget = 0.01;
  p.config_hash = "abc";
  p.calibration_negatives = 700;
  const auto q = profile_from_json(nlohmann::json::parse(to_json(p).dump()));
  EXPECT_EQ(q.identity, p.identity);
  EXPECT_EQ(q.ground_truth, p.ground_truth);
  EXPECT_EQ(q.threshold, p.threshold);
  EXPECT_EQ(q.config_hash, p.config_hash);
  EXPECT_EQ(q.calibration_negatives, 700u);
  auto bad = to_json(p);
  bad["threshold"] = 1.5;
  EXPECT_THROW(profile_from_json(bad), format_error);
  bad = to_json(p);
  bad["format"] = "other";
  EXPECT_THROW(profile_from_json(bad), format_error);
  bad = to_json(p);
  bad["ground_truth"] = "01x1";
  EXPECT_THROW(profile_from_json(bad), std::exception);
}

TEST(Detect, BatchedExtractionMatchesSingles) {
  auto b = init_params<float>(7, {6, 30});
  rng_t rng(8);
  std::vector<image> imgs = {synthetic_face(16, 16, rng), synthetic_face(16, 16, rng), synthetic_face(20, 12, rng),
                             synthetic_face(16, 16, rng)};
  const auto batched = extract_batched(b, imgs, 2);
  ASSERT_EQ(batched.size(), imgs.size());
  for (std::size_t i = 0; i < imgs.size(); ++i) {
    const auto single = extract(b, std::vector<image>{imgs[i]});
    for (std::size_t k = 0; k < 30; ++k) EXPECT_NEAR(batched[i].values[k], single[0].values[k], 1e-5);
  }
}

TEST(Detect, VerdictsFollowThreshold) {
  auto b = init_params<float>(7, {6, 30});
  rng_t rng(9);
  std::vector<image> imgs = {synthetic_face(16, 16, rng), synthetic_face(16, 16, rng)};
  detection_profile p;
  p.ground_truth = watermark::random(rng, 30);
  p.threshold = 1.0;
  for (const auto& d : detect(b, imgs, p)) {
    EXPECT_EQ(d.bitacc, bitwise_accuracy(d.extracted, p.ground_truth));
    EXPECT_EQ(d.result, d.bitacc < 1.0 ? verdict::fake : verdict::real);
  }
  p.threshold = 0.0;
  for (const auto& d : detect(b, imgs, p)) EXPECT_EQ(d.result, verdict::real);
  p.ground_truth = watermark::random(rng, 29);
  EXPECT_THROW(detect(b, imgs, p), shape_error);
}
