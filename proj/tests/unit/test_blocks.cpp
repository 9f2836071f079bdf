#include <gtest/gtest.h>

#include <cmath>

#include "attnseg/blocks.h"
#include "attnseg/error.h"
#include "gradcheck.h"

using namespace attnseg;
using attnseg::testing::random_tensor;

TEST(ParameterStore, RejectsDuplicatesAndCounts) {
  ParameterStore<double> s(1);
  s.he_uniform("a", {2, 3}, 3);
  s.constant("b", {4}, 0.0);
  EXPECT_EQ(s.parameter_count(), 10);
  EXPECT_THROW(s.constant("a", {1}, 0.0), ConfigError);
  EXPECT_TRUE(s.find("b").defined());
  EXPECT_FALSE(s.find("c").defined());
}

TEST(ParameterStore, HeUniformBoundsAndNameKeyedStreams) {
  ParameterStore<double> a(5), b(5);
  const auto w = a.he_uniform("w", {1000}, 6);
  b.constant("other", {3}, 1.0);
  const auto w2 = b.he_uniform("w", {1000}, 6);
  for (std::int64_t i = 0; i < 1000; ++i) {
    EXPECT_LE(std::abs(w[i]), 1.0);
    EXPECT_EQ(w[i], w2[i]);
  }
}

TEST(Attention, PositionAndChannelAreIdentitiesAtZeroGamma) {
  Rng rng(9);
  ParameterStore<double> store(3);
  PositionAttention<double> pam(store, "p", 16);
  ChannelAttention<double> cam(store, "c");
  ASSERT_EQ(pam.gamma().item(), 0.0);
  ASSERT_EQ(cam.gamma().item(), 0.0);
  const auto x = random_tensor({2, 16, 2, 3, 4}, rng, -3, 3, false);
  const auto yp = pam.forward(x);
  const auto yc = cam.forward(x);
  for (std::int64_t i = 0; i < x.numel(); ++i) {
    EXPECT_EQ(yp[i], x[i]);
    EXPECT_EQ(yc[i], x[i]);
  }
}

TEST(Attention, AffinitiesAreRowStochastic) {
  Rng rng(10);
  ParameterStore<double> store(4);
  PositionAttention<double> pam(store, "p", 8);
  Tensor<double> a;
  pam.forward(random_tensor({1, 8, 2, 2, 2}, rng, -1, 1, false), &a);
  ASSERT_EQ(a.shape(), (Shape{1, 8, 8}));
  for (int r = 0; r < 8; ++r) {
    double s = 0;
    for (int c = 0; c < 8; ++c) s += a[r * 8 + c];
    EXPECT_NEAR(s, 1.0, 1e-12);
  }
}

TEST(Attention, DualNeedsRngForTrainingDropout) {
  ParameterStore<double> store(1);
  DualAttention<double> dual(store, "d", 4, 0.5);
  Tensor<double> x({1, 4, 2, 2, 2}, 1.0);
  EXPECT_THROW(dual.forward(x, ForwardContext{true, nullptr}), ConfigError);
  EXPECT_NO_THROW(dual.forward(x, ForwardContext{false, nullptr}));
}

TEST(AttentionGate, CoefficientsInUnitIntervalAndSaturate) {
  Rng rng(11);
  ParameterStore<double> store(2);
  AttentionGate<double> gate(store, "g", {3, 2, 2});
  const auto skip = random_tensor({1, 3, 2, 2, 2}, rng, -1, 1, false);
  const auto g = random_tensor({1, 2, 2, 2, 2}, rng, -1, 1, false);
  Tensor<double> alpha;
  gate.forward(skip, g, &alpha);
  for (auto v : alpha.data()) {
    EXPECT_GT(v, 0.0);
    EXPECT_LT(v, 1.0);
  }
  Tensor<double> b = gate.psi_bias();
  b[0] = 1e4;
  const auto y = gate.forward(skip, g);
  for (std::int64_t i = 0; i < skip.numel(); ++i) EXPECT_EQ(y[i], skip[i]);
}

TEST(Multiscale, HalvesEachLevel) {
  Tensor<double> x({1, 1, 8, 8, 16}, 1.0);
  const auto s = multiscale_inputs(x, 3);
  ASSERT_EQ(s.size(), 2u);
  EXPECT_EQ(s[0].shape(), (Shape{1, 1, 4, 4, 8}));
  EXPECT_EQ(s[1].shape(), (Shape{1, 1, 2, 2, 4}));
  for (auto v : s[1].data()) EXPECT_DOUBLE_EQ(v, 1.0);
}

TEST(ConvBlock, ReferenceExamples) {
  ParameterStore<double> store(1);
  ConvBlock<double> block(store, "b", {1, 16, 2, Normalization::instance});
  EXPECT_EQ(block.forward(Tensor<double>({1, 1, 16, 16, 16}, 0.3)).shape(), (Shape{1, 16, 16, 16, 16}));
  ParameterStore<double> plain(2);
  ConvBlock<double> linear(plain, "b", {2, 3, 2, Normalization::none});
  const auto zero = linear.forward(Tensor<double>({1, 2, 4, 4, 4}, 0.0));
  for (auto v : zero.data()) EXPECT_EQ(v, 0.0);
}

TEST(AttentionGate, SaturationBothWaysAndContraction) {
  Rng rng(12);
  ParameterStore<double> store(3);
  AttentionGate<double> gate(store, "g", {2, 2, 2});
  const auto skip = random_tensor({1, 2, 3, 3, 3}, rng, -1, 1, false);
  const auto g = random_tensor({1, 2, 3, 3, 3}, rng, -1, 1, false);
  const auto y = gate.forward(skip, g);
  for (std::int64_t i = 0; i < skip.numel(); ++i) EXPECT_LE(std::abs(y[i]), std::abs(skip[i]));
  Tensor<double> b = gate.psi_bias();
  b[0] = 20.0;
  const auto hi = gate.forward(skip, g);
  for (std::int64_t i = 0; i < skip.numel(); ++i) EXPECT_NEAR(hi[i], skip[i], 1e-6);
  b[0] = -20.0;
  const auto lo = gate.forward(skip, g);
  for (auto v : lo.data()) EXPECT_NEAR(v, 0.0, 1e-6);
}

TEST(ChannelAttention, PermutationEquivariant) {
  Rng rng(13);
  ParameterStore<double> store(1);
  ChannelAttention<double> cam(store, "c");
  Tensor<double> gamma = cam.gamma();
  gamma[0] = 0.7;
  const std::int64_t C = 4, S = 8;
  const auto x = random_tensor({1, C, 2, 2, 2}, rng, -1, 1, false);
  const std::int64_t perm[] = {2, 0, 3, 1};
  Tensor<double> xp(x.shape());
  for (std::int64_t c = 0; c < C; ++c) {
    for (std::int64_t s = 0; s < S; ++s) xp[c * S + s] = x[perm[c] * S + s];
  }
  const auto y = cam.forward(x), yp = cam.forward(xp);
  for (std::int64_t c = 0; c < C; ++c) {
    for (std::int64_t s = 0; s < S; ++s) EXPECT_NEAR(yp[c * S + s], y[perm[c] * S + s], 1e-12);
  }
}

TEST(DualAttention, InferenceWithIdentityProjectionDoublesInput) {
  Rng rng(14);
  ParameterStore<double> store(1);
  DualAttention<double> dual(store, "d", 3, 0.5);
  Tensor<double> w = dual.projection_weight();
  for (auto& v : w.data()) v = 0.0;
  for (int c = 0; c < 3; ++c) w[c * 3 + c] = 1.0;
  const auto x = random_tensor({1, 3, 2, 2, 2}, rng, -1, 1, false);
  const auto y = dual.forward(x, {});
  for (std::int64_t i = 0; i < x.numel(); ++i) EXPECT_NEAR(y[i], 2 * x[i], 1e-12);
}

TEST(DualAttention, SeededTrainingIsBitIdentical) {
  Rng rng(15);
  ParameterStore<double> store(1);
  DualAttention<double> dual(store, "d", 8, 0.5);
  const auto x = random_tensor({1, 8, 2, 2, 2}, rng, -1, 1, false);
  Rng a(3), b(3);
  const auto ya = dual.forward(x, {true, &a});
  const auto yb = dual.forward(x, {true, &b});
  for (std::int64_t i = 0; i < ya.numel(); ++i) EXPECT_EQ(ya[i], yb[i]);
}

TEST(Multiscale, HalvingChainAndCompositionality) {
  Tensor<double> big({1, 1, 128, 128, 128}, 0.25);
  const auto s = multiscale_inputs(big, 5);
  ASSERT_EQ(s.size(), 4u);
  for (int l = 0; l < 4; ++l) {
    const std::int64_t n = 64 >> l;
    EXPECT_EQ(s[static_cast<std::size_t>(l)].shape(), (Shape{1, 1, n, n, n}));
  }
  for (auto v : s[3].data()) EXPECT_DOUBLE_EQ(v, 0.25);
  Rng rng(16);
  const auto x = random_tensor({1, 1, 16, 16, 16}, rng, -1, 1, false);
  const auto four = multiscale_inputs(x, 4);
  const auto three = multiscale_inputs(x, 3);
  const auto extra = ops::avg_pool3d(three.back(), ops::PoolOptions{{3, 3, 3}, {2, 2, 2}, {1, 1, 1}});
  for (std::int64_t i = 0; i < extra.numel(); ++i) EXPECT_EQ(four.back()[i], extra[i]);
}

TEST(DeepSupervisionHeads, ChannelSumsAndCount) {
  Rng rng(17);
  ParameterStore<double> store(1);
  std::vector<std::string> n;
  std::vector<std::int64_t> c;
  std::vector<Tensor<double>> f;
  for (int l = 4; l >= 0; --l) {
    n.push_back("head.level" + std::to_string(l));
    c.push_back(2);
    const std::int64_t s = 16 >> l;
    f.push_back(random_tensor({1, 2, s, s, s}, rng, -1, 1, false));
  }
  DeepSupervisionHeads<double> heads(store, n, c, 2);
  const auto maps = heads.forward(f);
  ASSERT_EQ(maps.size(), 5u);
  for (const auto& m : maps) {
    const std::int64_t S = m.numel() / 2;
    for (std::int64_t i = 0; i < S; ++i) EXPECT_NEAR(m[i] + m[S + i], 1.0, 1e-6);
  }
}
