#include <gtest/gtest.h>

#include <cmath>
#include <functional>
#include <sstream>

#include "sfwm/models.hpp"
#include "sfwm/synthetic.hpp"

using namespace sfwm;
using nn::phase;

namespace {

feature_map<double> random_map(std::size_t c, std::size_t n, std::size_t h, std::size_t w, rng_t& rng,
                                double lo = -1.0, double hi = 1.0) {
  feature_map<double> fm(c, n, h, w);
  for (auto& v : fm.data) v = lo + (hi - lo) * uniform01(rng);
  return fm;
}

std::vector<watermark> random_marks(std::size_t n, std::size_t bits, rng_t& rng) {
  std::vector<watermark> out;
  for (std::size_t i = 0; i < n; ++i) out.push_back(watermark::random(rng, bits));
  return out;
}

double dot(const feature_map<double>& a, const feature_map<double>& b) {
  double s = 0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a.data[i] * b.data[i];
  return s;
}

// Central-difference check of every tested parameter against the analytic
// gradient. `loss` re-runs the forward pass; grads must already be filled.
void check_params(std::vector<nn::tensor_slot<double>> slots, const std::function<double()>& loss,
                  std::size_t stride = 1, double tol = 1e-6) {
  const double h = 1e-6;
  std::size_t checked = 0;
  for (auto& s : slots) {
    if (!s.grad) continue;
    for (std::size_t i = 0; i < s.value->size(); i += stride) {
      double& p = (*s.value)[i];
      const double keep = p;
      p = keep + h;
      const double up = loss();
      p = keep - h;
      const double down = loss();
      p = keep;
      const double fd = (up - down) / (2 * h);
      const double an = (*s.grad)[i];
      EXPECT_NEAR(an, fd, tol * std::max(1.0, std::abs(fd))) << s.name << "[" << i << "]";
      ++checked;
    }
  }
  EXPECT_GT(checked, 0u);
}

model_config small_config() { return {4, 5}; }

}  // namespace

TEST(Architecture, EncoderTable) {
  const auto t = encoder_architecture({});
  ASSERT_EQ(t.size(), 6u);
  for (int i = 0; i < 4; ++i) {
    EXPECT_EQ(t[i].kernel, 3u);
    EXPECT_EQ(t[i].padding, 1u);
    EXPECT_TRUE(t[i].batch_norm);
    EXPECT_EQ(t[i].activation, "relu");
    EXPECT_EQ(t[i].out, 64u);
  }
  EXPECT_EQ(t[0].in, 3u);
  EXPECT_EQ(t[4].in, 64u + 30u + 3u);
  EXPECT_EQ(t[5].kernel, 1u);
  EXPECT_EQ(t[5].padding, 0u);
  EXPECT_EQ(t[5].out, 3u);
  EXPECT_FALSE(t[5].batch_norm);
  EXPECT_EQ(t[5].activation, "none");
}

TEST(Architecture, DecoderTable) {
  const auto t = decoder_architecture({});
  std::size_t convs = 0;
  for (const auto& r : t) convs += r.type == "conv";
  EXPECT_EQ(convs, 8u);
  EXPECT_EQ(t[7].out, 30u);
  EXPECT_EQ(t[8].type, "gap");
  EXPECT_EQ(t.back().type, "fc");
  EXPECT_EQ(t.back().in, 30u);
  EXPECT_EQ(t.back().out, 30u);
}

TEST(Architecture, DiscriminatorTable) {
  const auto t = discriminator_architecture({});
  std::size_t convs = 0;
  for (const auto& r : t) convs += r.type == "conv";
  EXPECT_EQ(convs, 3u);
  EXPECT_EQ(t.back().in, 64u);
  EXPECT_EQ(t.back().out, 1u);
}

TEST(Architecture, ConstructedModelsMatchTables) {
  model_bundle b(model_config{});
  ASSERT_EQ(b.enc.blocks().size(), 6u);
  for (std::size_t i = 0; i < 6; ++i) EXPECT_EQ(detail::describe(b.enc.blocks()[i]), encoder_architecture({})[i]);
  EXPECT_EQ(b.dec.blocks().size(), 8u);
  EXPECT_EQ(b.dec.fc().in_features(), 30u);
  EXPECT_EQ(b.disc.blocks().size(), 3u);
  EXPECT_EQ(b.disc.fc().out_features(), 1u);
}

TEST(Architecture, VerifyRejectsMismatch) {
  auto table = encoder_architecture({});
  auto convs = detail::build_convs<float>(table);
  table[2].out = 63;
  EXPECT_THROW(detail::verify("encoder", table, convs, 0, 0), shape_error);
}

TEST(Architecture, ParameterCount) {
  // Hand count for width 64, 30 bits.
  auto conv = [](std::size_t in, std::size_t out, std::size_t k, bool bn) {
    return out * in * k * k + out + (bn ? 2 * out : 0);
  };
  const std::size_t enc = conv(3, 64, 3, true) + 3 * conv(64, 64, 3, true) + conv(97, 64, 3, true) +
                          conv(64, 3, 1, false);
  const std::size_t dec = conv(3, 64, 3, true) + 6 * conv(64, 64, 3, true) + conv(64, 30, 3, true) + 30 * 30 + 30;
  const std::size_t disc = conv(3, 64, 3, true) + 2 * conv(64, 64, 3, true) + 64 + 1;
  model_bundle b(model_config{});
  std::size_t trainable = 0;
  for (auto& s : b.slots())
    if (s.grad) trainable += s.value->size();
  EXPECT_EQ(trainable, enc + dec + disc);
}

TEST(Shapes, DecoderGivesThirtyLogitsAtAnySize) {
  auto b = init_params<float>(3, {8, 30});
  rng_t rng(1);
  for (std::size_t side : {64u, 179u, 299u}) {
    std::vector<image> imgs = {synthetic_face(side, side, rng)};
    const auto logits = extract(b, imgs);
    ASSERT_EQ(logits.size(), 1u);
    EXPECT_EQ(logits[0].values.size(), 30u) << side;
  }
}

TEST(Shapes, EncoderPreservesShape) {
  auto b = init_params<float>(3, {8, 30});
  rng_t rng(2);
  std::vector<image> imgs = {synthetic_face(20, 33, rng), synthetic_face(20, 33, rng)};
  const auto marks = random_marks(2, 30, rng);
  const auto out = embed(b, imgs, marks);
  ASSERT_EQ(out.size(), 2u);
  EXPECT_TRUE(out[1].same_shape(imgs[1]));
  for (float v : out[0].data()) {
    EXPECT_GE(v, 0.0f);
    EXPECT_LE(v, 1.0f);
  }
}

TEST(Shapes, WrongWatermarkLengthRejected) {
  auto b = init_params<float>(3, {8, 30});
  rng_t rng(2);
  std::vector<image> imgs = {synthetic_face(16, 16, rng)};
  EXPECT_THROW(embed(b, imgs, random_marks(1, 29, rng)), shape_error);
  EXPECT_THROW(embed(b, imgs, random_marks(2, 30, rng)), shape_error);
}

TEST(ZeroParameters, OutputsAreZeroAndHalf) {
  model_bundle b(model_config{8, 30});
  // Weights all zero; batch norm keeps its identity defaults.
  for (auto& s : b.slots()) {
    const bool var = s.name.size() >= 12 && s.name.compare(s.name.size() - 12, 12, ".running_var") == 0;
    const bool gamma = s.name.size() >= 6 && s.name.compare(s.name.size() - 6, 6, ".gamma") == 0;
    std::fill(s.value->begin(), s.value->end(), (var || gamma) ? 1.0f : 0.0f);
  }
  rng_t rng(4);
  std::vector<image> imgs = {synthetic_face(16, 16, rng)};
  const auto raw = embed(b, imgs, random_marks(1, 30, rng), false);
  for (float v : raw[0].data()) EXPECT_EQ(v, 0.0f);
  const auto logits = extract(b, imgs);
  for (double l : logits[0].values) EXPECT_EQ(l, 0.0);
  const auto p = b.disc.forward(from_images(imgs), phase::eval);
  EXPECT_DOUBLE_EQ(p[0], 0.5);
}

TEST(Init, BoundsAndDeterminism) {
  auto a = init_params<float>(9, {8, 30});
  auto b = init_params<float>(9, {8, 30});
  auto c = init_params<float>(10, {8, 30});
  auto sa = a.slots(), sb = b.slots(), sc = c.slots();
  bool differs = false;
  for (std::size_t i = 0; i < sa.size(); ++i) {
    EXPECT_EQ(*sa[i].value, *sb[i].value) << sa[i].name;
    differs |= *sa[i].value != *sc[i].value;
    const auto& n = sa[i].name;
    if (n.size() > 7 && n.compare(n.size() - 7, 7, ".weight") == 0) {
      std::size_t fan_in = 1;
      for (std::size_t k = 1; k < sa[i].shape.size(); ++k) fan_in *= sa[i].shape[k];
      const double bound = std::sqrt(1.0 / static_cast<double>(fan_in));
      double lo = 1, hi = -1;
      for (float v : *sa[i].value) {
        EXPECT_LE(std::abs(v), bound + 1e-7) << n;
        lo = std::min<double>(lo, v);
        hi = std::max<double>(hi, v);
      }
      if (sa[i].value->size() > 200) {
        EXPECT_LT(lo, -0.8 * bound) << n;
        EXPECT_GT(hi, 0.8 * bound) << n;
      }
    } else if (n.find(".gamma") != std::string::npos || n.find(".running_var") != std::string::npos) {
      for (float v : *sa[i].value) EXPECT_EQ(v, 1.0f);
    } else {
      for (float v : *sa[i].value) EXPECT_EQ(v, 0.0f);
    }
  }
  EXPECT_TRUE(differs);
}

TEST(Gradients, ConvolutionAllPaths) {
  rng_t rng(5);
  for (auto [k, pad] : {std::pair<std::size_t, std::size_t>{3, 1}, {1, 0}, {5, 2}}) {
    nn::conv2d<double> conv(3, 4, k, pad);
    for (auto& w : conv.weight()) w = uniform01(rng) - 0.5;
    for (auto& w : conv.bias()) w = uniform01(rng) - 0.5;
    const auto x = random_map(3, 2, 5, 6, rng);
    const auto c = random_map(4, 2, 5, 6, rng);
    auto loss = [&] { return dot(conv.forward(x), c); };
    nn::zero_grads(conv.slots());
    const auto dx = conv.backward(x, c, true);
    check_params(conv.slots(), loss);
    // Input gradient.
    auto xx = x;
    for (std::size_t i = 0; i < x.size(); i += 7) {
      const double keep = xx.data[i];
      xx.data[i] = keep + 1e-6;
      const double up = dot(conv.forward(xx), c);
      xx.data[i] = keep - 1e-6;
      const double down = dot(conv.forward(xx), c);
      xx.data[i] = keep;
      EXPECT_NEAR(dx.data[i], (up - down) / 2e-6, 1e-6) << "k=" << k;
    }
  }
}

TEST(Gradients, ConvolutionMatchesDirectSum) {
  rng_t rng(6);
  nn::conv2d<double> conv(2, 3, 3, 1);
  for (auto& w : conv.weight()) w = uniform01(rng) - 0.5;
  for (auto& w : conv.bias()) w = uniform01(rng) - 0.5;
  const auto x = random_map(2, 2, 4, 5, rng);
  const auto y = conv.forward(x);
  for (std::size_t o = 0; o < 3; ++o)
    for (std::size_t n = 0; n < 2; ++n)
      for (int r = 0; r < 4; ++r)
        for (int q = 0; q < 5; ++q) {
          double s = conv.bias()[o];
          for (std::size_t i = 0; i < 2; ++i)
            for (int dr = -1; dr <= 1; ++dr)
              for (int dq = -1; dq <= 1; ++dq) {
                const int rr = r + dr, qq = q + dq;
                if (rr < 0 || rr >= 4 || qq < 0 || qq >= 5) continue;
                s += conv.weight()[((o * 2 + i) * 3 + (dr + 1)) * 3 + (dq + 1)] * x.slice(i, n)[rr * 5 + qq];
              }
          EXPECT_NEAR(y.slice(o, n)[r * 5 + q], s, 1e-12);
        }
}

TEST(Gradients, ConvBlockWithBatchNorm) {
  rng_t rng(7);
  nn::conv_block<double> block(3, 4, 3, 1, true, true);
  for (auto& s : block.slots())
    if (s.grad)
      for (auto& v : *s.value) v = uniform01(rng) - 0.3;
  const auto x = random_map(3, 3, 4, 4, rng);
  const auto c = random_map(4, 3, 4, 4, rng);
  auto loss = [&] { return dot(block.forward(x, phase::train_frozen), c); };
  nn::zero_grads(block.slots());
  loss();
  block.backward(c, true);
  check_params(block.slots(), loss, 1, 1e-5);
}

TEST(Gradients, EncoderEndToEnd) {
  rng_t rng(8);
  auto b = init_params<double>(11, small_config());
  const auto x = random_map(3, 2, 6, 6, rng, 0.0, 1.0);
  const auto marks = random_marks(2, 5, rng);
  const auto c = random_map(3, 2, 6, 6, rng);
  auto loss = [&] { return dot(b.enc.forward(x, marks, phase::train_frozen), c); };
  nn::zero_grads(b.enc.slots());
  loss();
  b.enc.backward(c);
  check_params(b.enc.slots(), loss, 3, 1e-5);
}

TEST(Gradients, DecoderEndToEnd) {
  rng_t rng(9);
  auto b = init_params<double>(12, small_config());
  const auto x = random_map(3, 3, 6, 6, rng, 0.0, 1.0);
  const auto c = random_map(5, 3, 1, 1, rng);
  auto loss = [&] { return dot(b.dec.forward(x, phase::train_frozen), c); };
  nn::zero_grads(b.dec.slots());
  loss();
  const auto dx = b.dec.backward(c, true);
  check_params(b.dec.slots(), loss, 3, 1e-5);
  auto xx = x;
  for (std::size_t i = 0; i < x.size(); i += 11) {
    const double keep = xx.data[i];
    xx.data[i] = keep + 1e-6;
    const double up = dot(b.dec.forward(xx, phase::train_frozen), c);
    xx.data[i] = keep - 1e-6;
    const double down = dot(b.dec.forward(xx, phase::train_frozen), c);
    xx.data[i] = keep;
    EXPECT_NEAR(dx.data[i], (up - down) / 2e-6, 1e-5);
  }
}

TEST(Gradients, DiscriminatorEndToEnd) {
  rng_t rng(10);
  auto b = init_params<double>(13, small_config());
  const auto x = random_map(3, 3, 6, 6, rng, 0.0, 1.0);
  const std::vector<double> c = {0.7, -1.2, 0.4};
  auto loss = [&] {
    const auto p = b.disc.forward(x, phase::train_frozen);
    return c[0] * p[0] + c[1] * p[1] + c[2] * p[2];
  };
  nn::zero_grads(b.disc.slots());
  loss();
  b.disc.backward(c, false);
  check_params(b.disc.slots(), loss, 2, 1e-5);
}

TEST(Gradients, BatchNormRunningStatsOnlyInTrainPhase) {
  rng_t rng(14);
  nn::conv_block<double> block(2, 3, 3, 1, true, false);
  const auto x = random_map(2, 2, 4, 4, rng, 1.0, 3.0);
  auto running = [&] {
    std::vector<double> out;
    for (auto& s : block.slots())
      if (!s.grad) out.insert(out.end(), s.value->begin(), s.value->end());
    return out;
  };
  const auto before = running();
  block.forward(x, phase::train_frozen);
  EXPECT_EQ(running(), before);
  block.forward(x, phase::eval);
  EXPECT_EQ(running(), before);
  block.forward(x, phase::train);
  EXPECT_NE(running(), before);
}

TEST(Gradients, BatchNormMomentum) {
  // One training pass on a single-channel constant-variance input.
  nn::conv_block<double> block(1, 1, 1, 0, true, false);
  block.conv().weight()[0] = 1.0;
  feature_map<double> x(1, 1, 1, 4);
  x.data = {1, 2, 3, 4};
  block.forward(x, phase::train);
  auto slots = block.slots();
  std::vector<double> mean, var;
  for (auto& s : slots) {
    if (s.name == "bn.running_mean") mean = *s.value;
    if (s.name == "bn.running_var") var = *s.value;
  }
  ASSERT_EQ(mean.size(), 1u);
  EXPECT_NEAR(mean[0], 0.1 * 2.5, 1e-12);
  EXPECT_NEAR(var[0], 0.9 + 0.1 * (5.0 / 3.0), 1e-12);
}

TEST(Checkpoint, RoundTrip) {
  auto b = init_params<float>(21, {8, 30});
  const auto bytes = serialize_checkpoint(b, "abc123");
  checkpoint_info info;
  auto c = deserialize_checkpoint<float>(bytes, &info);
  EXPECT_EQ(info.config_hash, "abc123");
  EXPECT_EQ(info.model, (model_config{8, 30}));
  auto sb = b.slots(), sc = c.slots();
  ASSERT_EQ(sb.size(), sc.size());
  for (std::size_t i = 0; i < sb.size(); ++i) EXPECT_EQ(*sb[i].value, *sc[i].value);
  EXPECT_EQ(serialize_checkpoint(c, "abc123"), bytes);
}

TEST(Checkpoint, RejectsCorruption) {
  auto b = init_params<float>(21, {8, 30});
  const auto bytes = serialize_checkpoint(b, "h");
  EXPECT_THROW(deserialize_checkpoint<float>("NOTACKPT" + bytes.substr(8)), format_error);
  EXPECT_THROW(deserialize_checkpoint<float>(bytes.substr(0, bytes.size() - 4)), format_error);
  EXPECT_THROW(deserialize_checkpoint<float>(bytes + "x"), format_error);
  // Shape tampering: swap a declared shape in the manifest.
  std::string bad = bytes;
  const auto pos = bad.find("[8,3,3,3]");
  ASSERT_NE(pos, std::string::npos);
  bad.replace(pos, 9, "[8,3,3,4]");
  EXPECT_THROW(deserialize_checkpoint<float>(bad), format_error);
}

TEST(Checkpoint, FileRoundTrip) {
  const auto dir = std::filesystem::temp_directory_path() / "sfwm_test_models";
  std::filesystem::create_directories(dir);
  auto b = init_params<float>(22, {8, 30});
  save_checkpoint(b, dir / "m.ckpt", "hash");
  checkpoint_info info;
  auto c = load_checkpoint(dir / "m.ckpt", &info);
  EXPECT_EQ(info.config_hash, "hash");
  rng_t rng(3);
  std::vector<image> imgs = {synthetic_face(16, 16, rng)};
  EXPECT_EQ(extract(b, imgs)[0].values, extract(c, imgs)[0].values);
  std::filesystem::remove_all(dir);
}

TEST(Watermark, MarkPlanesReachEncoder) {
  // Changing only the watermark changes the encoder output.
  auto b = init_params<float>(23, {8, 30});
  rng_t rng(5);
  std::vector<image> imgs = {synthetic_face(16, 16, rng)};
  auto m1 = random_marks(1, 30, rng);
  auto m2 = m1;
  std::vector<std::uint8_t> bits(m2[0].bits().begin(), m2[0].bits().end());
  bits[0] ^= 1;
  m2[0] = watermark(bits);
  const auto a = embed(b, imgs, m1, false), c = embed(b, imgs, m2, false);
  EXPECT_NE(a[0].data(), c[0].data());
}
