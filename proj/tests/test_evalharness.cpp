#include <gtest/gtest.h>

#include <set>

#include "sfwm/evalharness.hpp"
#include "sfwm/synthetic.hpp"

using namespace sfwm;

namespace {

model_bundle small_model(std::uint64_t seed) { return init_params<float>(seed, {4, 30}); }

std::size_t count_of(const std::string& text, const std::string& needle) {
  std::size_t n = 0;
  for (auto p = text.find(needle); p != std::string::npos; p = text.find(needle, p + 1)) ++n;
  return n;
}

}  // namespace

TEST(Stats, MeanAndLowerMedian) {
  EXPECT_EQ(median_of({3, 1, 2}), 2);
  EXPECT_EQ(median_of({4, 1, 3, 2}), 2);
  EXPECT_EQ(median_of({5}), 5);
  EXPECT_EQ(median_of({}), 0);
  EXPECT_DOUBLE_EQ(mean_of({1, 2, 4}), 7.0 / 3.0);
  EXPECT_EQ(mean_of({}), 0);
}

TEST(Proxies, RegionReplaceWindows) {
  const auto faces = synthetic_faces(2, 10, 1);
  const auto& a = faces[0];
  const auto& b = faces[1];
  EXPECT_EQ(region_replace(a, b, 0.0).data(), a.data());
  EXPECT_EQ(region_replace(a, b, 1.0).data(), b.data());
  // 0.5 of 10 -> a 5x5 window starting at row/column 2.
  const auto r = region_replace(a, b, 0.5);
  for (std::size_t c = 0; c < 3; ++c)
    for (std::size_t y = 0; y < 10; ++y)
      for (std::size_t x = 0; x < 10; ++x) {
        const bool inside = y >= 2 && y < 7 && x >= 2 && x < 7;
        EXPECT_EQ(r.at(c, y, x), inside ? b.at(c, y, x) : a.at(c, y, x));
      }
  // 0.6 of 10 -> 6x6 window at 2.
  const auto r6 = region_replace(a, b, 0.6);
  EXPECT_EQ(r6.at(0, 7, 7), b.at(0, 7, 7));
  EXPECT_EQ(r6.at(0, 8, 8), a.at(0, 8, 8));
  EXPECT_THROW(region_replace(a, b, 1.5), parameter_error);
}

TEST(Proxies, RegionReplaceResizesDonor) {
  rng_t rng(2);
  const auto a = synthetic_face(16, 16, rng);
  const auto big = synthetic_face(32, 32, rng);
  EXPECT_EQ(region_replace(a, big, 1.0).data(), resize_to(big, 16, 16).data());
}

TEST(Proxies, PiecewiseWarp) {
  rng_t rng(3);
  const auto a = synthetic_face(24, 24, rng);
  rng_t r0(1);
  EXPECT_EQ(piecewise_warp(a, 0.0, r0).data(), quantize8(a).data());
  rng_t r1(7), r2(7);
  const auto w1 = piecewise_warp(a, 3.0, r1), w2 = piecewise_warp(a, 3.0, r2);
  EXPECT_EQ(w1.data(), w2.data());
  EXPECT_GT(mean_abs_diff(w1, a), 1e-3);
  for (float v : w1.data()) {
    EXPECT_GE(v, 0.0f);
    EXPECT_LE(v, 1.0f);
  }
  EXPECT_THROW(piecewise_warp(a, -1.0, r1), parameter_error);
}

TEST(Proxies, ApplyUsesNextOriginalAsDonor) {
  const auto orig = synthetic_faces(3, 12, 4);
  const auto out = apply_proxy(orig, orig, manipulation_proxy::region_replace(1.0), 0);
  ASSERT_EQ(out.size(), 3u);
  EXPECT_EQ(out[0].data(), orig[1].data());
  EXPECT_EQ(out[2].data(), orig[0].data());
  EXPECT_THROW(apply_proxy({orig[0]}, {orig[0]}, manipulation_proxy::region_replace(1.0), 0), parameter_error);
  EXPECT_THROW(apply_proxy(orig, orig, manipulation_proxy::foreign_reencode(), 0), parameter_error);
  EXPECT_EQ(manipulation_proxy::region_replace(0.6).label(), "RegionReplace(0.60)");
}

TEST(Proxies, ForeignReencodeUsesForeignModel) {
  auto foreign = small_model(5);
  const auto orig = synthetic_faces(2, 16, 5);
  const auto out = apply_proxy(orig, orig, manipulation_proxy::foreign_reencode(), 0, &foreign);
  std::vector<watermark> msgs;
  for (const auto& l : extract(foreign, orig)) msgs.push_back(harden(l));
  const auto expect = embed_published(foreign, orig, msgs);
  ASSERT_EQ(out.size(), 2u);
  EXPECT_EQ(out[1].data(), expect[1].data());
}

TEST(Sweep, ThirtyFiveRowsAndNeutralParameters) {
  auto b = small_model(6);
  const auto imgs = synthetic_faces(3, 32, 6);
  rng_t rng(6);
  const auto gt = watermark::random(rng, 30);
  const auto rep = robustness_sweep(b, imgs, gt);
  ASSERT_EQ(rep.rows.size(), 35u);
  EXPECT_EQ(rep.rows[0].op.kind, op_kind::identity);
  std::set<std::string> labels;
  for (const auto& r : rep.rows) labels.insert(r.op.label());
  EXPECT_EQ(labels.size(), 35u);
  const auto& id = rep.rows[0];
  for (const auto& op : {post_process_op::blur(0.0), post_process_op::crop(1.0), post_process_op::resize(1.0)}) {
    const auto& row = find_row(rep, op);
    EXPECT_EQ(row.mean_bitacc, id.mean_bitacc) << op.label();
    EXPECT_EQ(row.median_bitacc, id.median_bitacc) << op.label();
    EXPECT_EQ(row.real_rate, -1.0);
  }
  double s = 0;
  for (const auto& r : rep.rows) s += r.mean_bitacc;
  EXPECT_NEAR(rep.grid_mean_bitacc, s / 35.0, 1e-12);
  // Identity row against a direct computation.
  const auto marked = watermark_all(b, imgs, gt);
  EXPECT_NEAR(id.mean_bitacc, mean_of(bitaccs_of(b, marked, gt)), 1e-12);
  double ss = 0;
  for (std::size_t i = 0; i < 3; ++i) ss += ssim(imgs[i], marked[i]);
  EXPECT_NEAR(rep.mean_ssim_watermarked, ss / 3, 1e-12);
  EXPECT_THROW(find_row(rep, post_process_op::jpeg(55)), parameter_error);
}

TEST(Sweep, OutputsAndThreshold) {
  auto b = small_model(7);
  const auto imgs = synthetic_faces(2, 32, 7);
  rng_t rng(7);
  const auto gt = watermark::random(rng, 30);
  const auto rep = robustness_sweep(b, imgs, gt, 0.0);
  for (const auto& r : rep.rows) EXPECT_EQ(r.real_rate, 1.0);
  const auto csv = to_csv(rep);
  EXPECT_EQ(count_of(csv, "\n"), 36u);
  EXPECT_EQ(csv.rfind("op,param,mean_bitacc", 0), 0u);
  const auto svg = jpeg_curve_svg(rep);
  EXPECT_EQ(svg.rfind("<svg", 0), 0u);
  EXPECT_NE(svg.find("</svg>"), std::string::npos);
  EXPECT_EQ(count_of(svg, "<circle"), 10u);
  const auto j = to_json(rep);
  EXPECT_EQ(j.at("rows").size(), 35u);
  EXPECT_EQ(j.at("threshold").get<double>(), 0.0);
  EXPECT_NEAR(family_mean(rep, op_kind::jpeg),
              [&] {
                double s = 0;
                for (int q = 10; q <= 100; q += 10) s += find_row(rep, post_process_op::jpeg(q)).mean_bitacc;
                return s / 10;
              }(),
              1e-12);
}

TEST(Calibration, ProfileCoversIdentityAndGrid) {
  auto b = small_model(8);
  const auto val = synthetic_faces(4, 32, 8);
  rng_t rng(8);
  const auto gt = watermark::random(rng, 30);
  std::vector<double> neg;
  const auto p = calibrate_profile(b, val, gt, "h", 0.01, &neg);
  EXPECT_EQ(neg.size(), 4u * 35u);
  EXPECT_EQ(p.calibration_negatives, neg.size());
  EXPECT_EQ(p.config_hash, "h");
  EXPECT_EQ(p.ground_truth, gt);
  EXPECT_LE(false_positive_rate(neg, p.threshold), 0.01);
  EXPECT_EQ(p.threshold, calibrate_threshold(neg, 0.01));
}

TEST(Scoring, Example) {
  const auto m = score({1.0, 1.0, 0.9, 0.95}, {0.5, 0.6, 0.97, 0.4}, 0.95, 1);
  EXPECT_DOUBLE_EQ(*m.fpr, 0.25);
  EXPECT_DOUBLE_EQ(*m.fnr, 0.25);
  EXPECT_DOUBLE_EQ(*m.acc, 0.75);
}

TEST(Fragility, FullReplacementDecodesDonor) {
  auto b = small_model(9);
  const auto imgs = synthetic_faces(3, 16, 9);
  rng_t rng(9);
  const auto gt = watermark::random(rng, 30);
  const auto rep = fragility_probe(b, imgs, gt, manipulation_proxy::region_replace(1.0), 1.0);
  const std::vector<image> donors = {imgs[1], imgs[2], imgs[0]};
  EXPECT_EQ(rep.bitaccs, bitaccs_of(b, donors, gt));
  EXPECT_EQ(rep.median_bitacc, median_of(rep.bitaccs));
  std::size_t fake = 0;
  for (double a : rep.bitaccs) fake += a < 1.0;
  EXPECT_DOUBLE_EQ(rep.detection_rate, fake / 3.0);
  const auto j = to_json(rep);
  EXPECT_NE(j.at("note").get<std::string>().find("proxy"), std::string::npos);
}

TEST(Attack, FollowsProtocol) {
  auto defender = small_model(10);
  auto attacker = small_model(11);
  const auto test = synthetic_faces(3, 32, 10);
  rng_t rng(10);
  detection_profile p;
  p.ground_truth = watermark::random(rng, 30);
  p.threshold = 0.9;
  const auto rep = adaptive_attack_eval(defender, attacker, p, test, 3);
  // Independent reconstruction of the attack.
  const auto marked = watermark_all(defender, test, p.ground_truth);
  std::vector<watermark> stolen;
  for (const auto& l : extract(attacker, marked)) stolen.push_back(harden(l));
  const std::vector<image> manipulated = {test[1], test[2], test[0]};
  const auto forged = embed_published(attacker, manipulated, stolen);
  const auto expect = bitaccs_of(defender, forged, p.ground_truth);
  ASSERT_EQ(rep.attacked_bitaccs.size(), 3u);
  for (std::size_t i = 0; i < 3; ++i) EXPECT_NEAR(rep.attacked_bitaccs[i], expect[i], 1e-12);
  EXPECT_EQ(rep.metrics.positives, 3u);
  EXPECT_EQ(rep.metrics.negatives, 3u * 35u);
  EXPECT_EQ(to_json(rep).at("manipulation").get<std::string>(), "RegionReplace(1.00)");
}

TEST(Ablation, RunsEveryVariantAndSeed) {
  const auto val = synthetic_faces(3, 32, 12);
  const auto test = synthetic_faces(3, 32, 13);
  rng_t rng(12);
  const auto gt = watermark::random(rng, 30);
  training_config base;
  base.model_width = 4;
  std::vector<training_config> seen;
  auto fn = [&](const training_config& c) {
    seen.push_back(c);
    return init_params<float>(c.seed, c.model());
  };
  const auto rep = ablation_suite(fn, base, {1, 2}, val, test, gt);
  ASSERT_EQ(rep.runs.size(), 8u);
  ASSERT_EQ(seen.size(), 8u);
  EXPECT_EQ(seen[0].scheduler, scheduler_kind::rl);
  EXPECT_EQ(seen[0].jpeg_gradient, jpeg::gradient_mode::surrogate);
  EXPECT_EQ(seen[2].scheduler, scheduler_kind::random);
  EXPECT_EQ(seen[4].jpeg_gradient, jpeg::gradient_mode::zero);
  EXPECT_EQ(seen[6].scheduler, scheduler_kind::random);
  EXPECT_EQ(seen[6].jpeg_gradient, jpeg::gradient_mode::zero);
  EXPECT_EQ(seen[7].seed, 2u);
  EXPECT_EQ(rep.of("no_jpeg").size(), 2u);
  const double m = (rep.of("full")[0].acc + rep.of("full")[1].acc) / 2;
  EXPECT_DOUBLE_EQ(rep.mean("full", &ablation_run::acc), m);
  const auto j = to_json(rep);
  EXPECT_EQ(j.at("runs").size(), 8u);
  EXPECT_TRUE(j.at("summary").contains("no_rl_jpeg"));
}
