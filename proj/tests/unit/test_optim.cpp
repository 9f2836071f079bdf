#include <gtest/gtest.h>

#include <cmath>

#include "attnseg/optim.h"
#include "attnseg/training.h"

using namespace attnseg;

TEST(Adam, ZeroGradientLeavesWeights) {
  std::vector<double> w{1.0, -2.0, 3.0}, g(3, 0.0);
  AdamState<double> s;
  adam_step<double>(w, g, s, {});
  EXPECT_EQ(w, (std::vector<double>{1.0, -2.0, 3.0}));
}

TEST(Adam, FirstStepIsLrTimesSign) {
  std::vector<double> w{0.0, 0.0, 0.0}, g{0.3, -5.0, 1e-3};
  AdamState<double> s;
  AdamOptions o;
  adam_step<double>(w, g, s, o);
  for (std::size_t i = 0; i < 3; ++i) EXPECT_NEAR(w[i], -o.lr * (g[i] > 0 ? 1 : -1), 1e-7);
  EXPECT_EQ(s.t, 1);
}

TEST(Adam, MatchesHandRecurrence) {
  std::vector<double> w{0.5}, m{0}, v{0};
  AdamState<double> s;
  AdamOptions o{0.01, 0.9, 0.999, 1e-8};
  double ref = 0.5;
  for (int t = 1; t <= 10; ++t) {
    const double g = std::sin(t) + 0.2;
    m[0] = 0.9 * m[0] + 0.1 * g;
    v[0] = 0.999 * v[0] + 0.001 * g * g;
    ref -= 0.01 * (m[0] / (1 - std::pow(0.9, t))) / (std::sqrt(v[0] / (1 - std::pow(0.999, t))) + 1e-8);
    std::vector<double> gv{g};
    adam_step<double>(w, gv, s, o);
    EXPECT_NEAR(w[0], ref, 1e-14);
  }
}

TEST(Adam, QuadraticBowlConverges) {
  // 500 steps of size <= lr cannot cover distance 1 at lr 1e-3.
  std::vector<double> w{1.0};
  AdamState<double> s;
  for (int i = 0; i < 500; ++i) {
    const std::vector<double> g{2 * w[0]};
    adam_step<double>(w, g, s, {0.01});
  }
  EXPECT_LT(std::abs(w[0]), 1e-2);
}

TEST(Adam, StoreStepScalesGradientsAndCountsSteps) {
  ParameterStore<double> a(1), b(1);
  Tensor<double> pa = a.constant("w", {2}, 1.0), pb = b.constant("w", {2}, 1.0);
  pa.mutable_grad()[0] = 4.0;
  pb.mutable_grad()[0] = 1.0;
  Adam<double> oa(a, {0.1}), ob(b, {0.1});
  oa.step(0.25);
  ob.step();
  EXPECT_EQ(pa[0], pb[0]);
  EXPECT_EQ(pa[1], 1.0);
  EXPECT_EQ(oa.steps(), 1);
}

TEST(EarlyStopping, PatienceArithmetic) {
  EarlyStopping s(30);
  for (int e = 1; e <= 100; ++e) ASSERT_FALSE(s.update(e, 1.0 / e));
  EarlyStopping c(30);
  int stopped = 0;
  for (int e = 1; e <= 100 && !stopped; ++e) {
    if (c.update(e, e < 7 ? 10.0 - e : 3.0)) stopped = e;
  }
  // Constant from epoch 6 (the value 4 at epoch 6, then 3 from 7) -> best 7.
  EXPECT_EQ(c.best_epoch(), 7);
  EXPECT_EQ(stopped, 37);
}

TEST(EarlyStopping, RequiresStrictImprovement) {
  EarlyStopping s(2);
  EXPECT_FALSE(s.update(1, 0.5));
  EXPECT_FALSE(s.update(2, 0.5));
  EXPECT_FALSE(s.improved());
  EXPECT_TRUE(s.update(3, 0.5));
  EXPECT_EQ(s.best_epoch(), 1);
}
