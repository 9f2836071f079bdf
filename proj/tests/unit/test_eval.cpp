#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>

#include "attnseg/components.h"
#include "attnseg/error.h"
#include "attnseg/metrics.h"
#include "attnseg/random.h"
#include "attnseg/report.h"
#include "instances.h"
#include "oracles.h"

using namespace attnseg;
using namespace attnseg::testing;

TEST(Thresholds, ValuesAndSweep) {
  EXPECT_DOUBLE_EQ(threshold_value(0), 0.1);
  EXPECT_DOUBLE_EQ(threshold_value(9), 1.0);
  const std::vector<float> p(10, 0.45f);
  const auto masks = threshold_sweep(p);
  ASSERT_EQ(masks.size(), 10u);
  for (int k = 0; k < 10; ++k) {
    const bool full = threshold_value(k) <= 0.4 + 1e-12;
    for (auto v : masks[static_cast<std::size_t>(k)]) EXPECT_EQ(v, full ? 1 : 0) << k;
  }
  EXPECT_THROW(threshold_sweep(std::vector<float>{1.5f}), InputError);
  EXPECT_THROW(threshold_sweep(std::vector<float>{-0.1f}), InputError);
}

TEST(Thresholds, Nested) {
  Rng rng(1);
  std::vector<float> p(1000);
  for (auto& v : p) v = static_cast<float>(uniform01(rng));
  const auto a = threshold_mask(p, 0.6), b = threshold_mask(p, 0.5);
  for (std::size_t i = 0; i < p.size(); ++i) EXPECT_LE(a[i], b[i]);
}

TEST(Components, ReferenceExamples) {
  std::vector<std::uint8_t> m(4096, 0);
  fill_box(m, {1, 1, 1}, {3, 3, 3});
  fill_box(m, {5, 1, 1}, {7, 3, 3});
  EXPECT_EQ(connected_components(m, k16).count, 2);
  std::vector<std::uint8_t> c(4096, 0);
  c[static_cast<std::size_t>(at(4, 4, 4))] = 1;
  c[static_cast<std::size_t>(at(5, 5, 5))] = 1;
  EXPECT_EQ(connected_components(c, k16, 26).count, 1);
  EXPECT_EQ(connected_components(c, k16, 18).count, 2);
  EXPECT_EQ(connected_components(c, k16, 6).count, 2);
  EXPECT_THROW(connected_components(c, k16, 8), InputError);
}

TEST(Components, LargestComponentAndVolume) {
  std::vector<std::uint8_t> m(4096, 0);
  fill_box(m, {0, 0, 0}, {2, 2, 2});
  fill_box(m, {8, 8, 8}, {11, 11, 11});
  const auto c = connected_components(m, k16);
  EXPECT_EQ(c.sizes, (std::vector<std::int64_t>{8, 27}));
  const auto big = largest_component(c);
  EXPECT_EQ(std::count(big.begin(), big.end(), 1), 27);
  EXPECT_DOUBLE_EQ(component_volume_ml(c, 2, 0.001), 0.027);
}

TEST(Components, MatchFloodFillOracleOn200Instances) {
  for (int i = 0; i < 200; ++i) {
    Rng rng(static_cast<std::uint64_t>(i));
    const auto m = random_mask(rng, 0.02 + 0.1 * uniform01(rng));
    for (int conn : {6, 18, 26}) {
      const auto lib = connected_components(m, k16, conn);
      const auto ref = oracle::flood_fill(m, k16, conn);
      ASSERT_EQ(lib.count, ref.count) << i << " " << conn;
      ASSERT_EQ(lib.labels, ref.labels) << i << " " << conn;
    }
  }
}

TEST(Pairing, ReferenceExamples) {
  std::vector<std::uint8_t> gt(4096, 0), pred(4096, 0);
  fill_box(gt, {2, 2, 2}, {5, 5, 5});
  fill_box(pred, {4, 4, 4}, {7, 7, 7});
  auto d = pair_components(connected_components(gt, k16), connected_components(pred, k16));
  EXPECT_EQ(d.tp(), 1);
  EXPECT_EQ(d.recall(), 1.0);
  EXPECT_EQ(d.precision(), 1.0);

  fill_box(pred, {12, 12, 12}, {14, 14, 14});
  d = pair_components(connected_components(gt, k16), connected_components(pred, k16));
  EXPECT_EQ(d.recall(), 1.0);
  EXPECT_EQ(d.precision(), 0.5);
  EXPECT_NEAR(f1_score(d.precision(), d.recall()), 2.0 / 3.0, 1e-15);

  std::vector<std::uint8_t> gt2 = gt, pred2(4096, 0);
  fill_box(gt2, {10, 10, 10}, {12, 12, 12});
  fill_box(pred2, {2, 2, 2}, {5, 5, 5});
  d = pair_components(connected_components(gt2, k16), connected_components(pred2, k16));
  EXPECT_EQ(d.recall(), 0.5);
}

TEST(Pairing, Conventions) {
  std::vector<std::uint8_t> none(4096, 0), some(4096, 0);
  fill_box(some, {1, 1, 1}, {3, 3, 3});
  const auto miss = pair_components(connected_components(some, k16), connected_components(none, k16));
  EXPECT_EQ(miss.recall(), 0.0);
  EXPECT_EQ(miss.precision(), 1.0);
  const auto alarm = pair_components(connected_components(none, k16), connected_components(some, k16));
  EXPECT_EQ(alarm.recall(), 1.0);
  EXPECT_EQ(alarm.precision(), 0.0);
}

TEST(Pairing, MatchesBruteForceOracle) {
  for (int i = 0; i < 200; ++i) {
    Rng rng(1000 + static_cast<std::uint64_t>(i));
    const auto g = random_mask(rng, 0.01), p = random_mask(rng, 0.01);
    const auto lg = connected_components(g, k16), lp = connected_components(p, k16);
    const auto d = pair_components(lg, lp);
    auto r = oracle::pair(oracle::flood_fill(g, k16), oracle::flood_fill(p, k16));
    // Pairs are reported in gt label order.
    std::sort(r.pairs.begin(), r.pairs.end(), [](const auto& a, const auto& b) { return a.gt < b.gt; });
    ASSERT_EQ(d.pairs.size(), r.pairs.size()) << i;
    for (std::size_t k = 0; k < r.pairs.size(); ++k) {
      EXPECT_EQ(d.pairs[k].gt, r.pairs[k].gt) << i;
      EXPECT_EQ(d.pairs[k].pred, r.pairs[k].pred) << i;
      EXPECT_EQ(d.pairs[k].overlap, r.pairs[k].overlap) << i;
      EXPECT_NEAR(d.pairs[k].dice, r.pairs[k].dice, 1e-9) << i;
    }
    EXPECT_EQ(d.fn(), r.fn);
    EXPECT_EQ(d.fp(), r.fp);
  }
}

TEST(PatientMetrics, PerfectEmptyAndFalsePositiveBlob) {
  std::vector<std::uint8_t> gt(4096, 0);
  fill_box(gt, {3, 3, 3}, {8, 8, 8});
  std::vector<float> perfect(gt.begin(), gt.end());
  for (const auto& m : patient_metrics("a", gt, perfect, k16)) {
    EXPECT_EQ(m.dice, 1.0);
    EXPECT_EQ(m.dice_tp, 1.0);
    EXPECT_EQ(m.recall, 1.0);
    EXPECT_EQ(m.precision, 1.0);
  }
  for (const auto& m : patient_metrics("b", gt, std::vector<float>(4096, 0.0f), k16)) {
    EXPECT_EQ(m.dice, 0.0);
    EXPECT_EQ(m.recall, 0.0);
    EXPECT_EQ(m.precision, 1.0);
    EXPECT_FALSE(m.has_tp);
  }
  std::vector<float> fp = perfect;
  for (auto z = 11; z < 13; ++z)
    for (auto y = 11; y < 13; ++y)
      for (auto x = 11; x < 13; ++x) fp[static_cast<std::size_t>(at(z, y, x))] = 1.0f;
  const auto m = patient_metrics("c", gt, fp, k16)[4];
  EXPECT_LT(m.dice, m.dice_tp);
  EXPECT_EQ(m.fp, 1);
  EXPECT_EQ(m.precision, 0.5);
}

TEST(PatientMetrics, MatchOracleOn200Instances) {
  for (int i = 0; i < 200; ++i) {
    Rng rng(5000 + static_cast<std::uint64_t>(i));
    const auto gt = random_mask(rng, uniform01(rng) < 0.1 ? 0.0 : 0.003);
    const auto prob = random_prob(rng, gt);
    const auto lib = patient_metrics("x", gt, prob, k16);
    ASSERT_EQ(lib.size(), 10u);
    for (int k = 0; k < 10; ++k) {
      const auto ref = oracle::score(gt, prob, k16, threshold_value(k));
      const auto& m = lib[static_cast<std::size_t>(k)];
      EXPECT_EQ(m.tp, ref.tp);
      EXPECT_EQ(m.fn, ref.fn);
      EXPECT_EQ(m.fp, ref.fp);
      EXPECT_EQ(m.has_tp, ref.has_tp);
      EXPECT_NEAR(m.dice, ref.dice, 1e-9);
      EXPECT_NEAR(m.recall, ref.recall, 1e-9);
      EXPECT_NEAR(m.precision, ref.precision, 1e-9);
      if (ref.has_tp) EXPECT_NEAR(m.dice_tp, ref.dice_tp, 1e-9);
    }
  }
}

TEST(Pooled, ReferenceExamples) {
  auto patient = [](const std::string& id, double v) {
    std::vector<PatientMetrics> out;
    for (int k = 0; k < 10; ++k) out.push_back({id, threshold_value(k), v, v, true, v, v, 1, 0, 0});
    return out;
  };
  std::vector<std::vector<PatientMetrics>> same(3);
  for (int f = 0; f < 3; ++f) {
    for (int p = 0; p < 4; ++p) {
      const auto m = patient("p" + std::to_string(f * 4 + p), 0.7);
      same[static_cast<std::size_t>(f)].insert(same[static_cast<std::size_t>(f)].end(), m.begin(), m.end());
    }
  }
  const auto r = pooled_estimates(same);
  EXPECT_NEAR(r.rows[0].dice.mean, 0.7, 1e-15);
  EXPECT_NEAR(r.rows[0].dice.std, 0.0, 1e-15);
  std::vector<std::vector<PatientMetrics>> two{patient("a", 0.8), patient("b", 0.9)};
  const auto t = pooled_estimates(two);
  EXPECT_NEAR(t.rows[3].dice.mean, 0.85, 1e-15);
  EXPECT_NEAR(t.rows[3].dice.std, 0.05, 1e-15);
  EXPECT_THROW(pooled_estimates({patient("a", 1.0), {}}), ConfigError);
}

TEST(Pooled, MatchesRecomputationOracle) {
  for (int i = 0; i < 200; ++i) {
    Rng rng(9000 + static_cast<std::uint64_t>(i));
    const int folds = 2 + static_cast<int>(uniform_index(rng, 4));
    std::vector<std::vector<PatientMetrics>> per_fold(static_cast<std::size_t>(folds));
    std::vector<std::vector<std::vector<oracle::PatientScore>>> scores(10, std::vector<std::vector<oracle::PatientScore>>(folds));
    for (int f = 0; f < folds; ++f) {
      const int n = 1 + static_cast<int>(uniform_index(rng, 3));
      for (int p = 0; p < n; ++p) {
        const auto gt = random_mask(rng, 0.002);
        const auto prob = random_prob(rng, gt);
        const auto m = patient_metrics("p", gt, prob, k16);
        per_fold[static_cast<std::size_t>(f)].insert(per_fold[static_cast<std::size_t>(f)].end(), m.begin(), m.end());
        for (int k = 0; k < 10; ++k) scores[static_cast<std::size_t>(k)][static_cast<std::size_t>(f)].push_back(oracle::score(gt, prob, k16, threshold_value(k)));
      }
    }
    const auto report = pooled_estimates(per_fold);
    int best = 0;
    double best_f1 = -1, best_dice = -1;
    for (int k = 0; k < 10; ++k) {
      const auto o = oracle::pool(scores[static_cast<std::size_t>(k)]);
      const auto& row = report.rows[static_cast<std::size_t>(k)];
      EXPECT_NEAR(row.dice.mean, o.dice_mean, 1e-9);
      EXPECT_NEAR(row.dice.std, o.dice_std, 1e-9);
      EXPECT_NEAR(row.dice_tp.mean, o.dice_tp_mean, 1e-9);
      EXPECT_NEAR(row.dice_tp.std, o.dice_tp_std, 1e-9);
      EXPECT_NEAR(row.f1.mean, o.f1_mean, 1e-9);
      EXPECT_NEAR(row.f1.std, o.f1_std, 1e-9);
      EXPECT_NEAR(row.recall.mean, o.recall_mean, 1e-9);
      EXPECT_NEAR(row.recall.std, o.recall_std, 1e-9);
      EXPECT_NEAR(row.precision.mean, o.precision_mean, 1e-9);
      EXPECT_NEAR(row.precision.std, o.precision_std, 1e-9);
      if (o.f1_mean > best_f1 + 1e-12 || (std::abs(o.f1_mean - best_f1) <= 1e-12 && o.dice_mean > best_dice + 1e-12)) {
        best = k;
        best_f1 = o.f1_mean;
        best_dice = o.dice_mean;
      }
    }
    EXPECT_EQ(report.best, best) << i;
  }
}

TEST(Bins, HundredPatientsTenBinsAndTies) {
  std::vector<PatientVolume> p;
  for (int i = 0; i < 100; ++i) p.push_back({"p" + std::to_string(1000 + i), double(100 - i), i / 100.0});
  const auto bins = volume_bin_analysis(p, 10);
  ASSERT_EQ(bins.size(), 10u);
  for (const auto& b : bins) EXPECT_EQ(b.patients.size(), 10u);
  EXPECT_EQ(bins[0].patients.front(), "p1099");
  std::vector<PatientVolume> tied;
  for (int i = 0; i < 23; ++i) tied.push_back({"t" + std::to_string(10 + (i * 7) % 23), 1.0, 0.5});
  const auto tb = volume_bin_analysis(tied, 10);
  std::vector<std::string> order;
  for (const auto& b : tb) {
    EXPECT_GE(b.patients.size(), 2u);
    EXPECT_LE(b.patients.size(), 3u);
    order.insert(order.end(), b.patients.begin(), b.patients.end());
  }
  EXPECT_TRUE(std::is_sorted(order.begin(), order.end()));
  EXPECT_EQ(tb[0].patients.size(), 3u);
  EXPECT_EQ(tb[9].patients.size(), 2u);
}

TEST(Bins, MatchSortAndChunkOracle) {
  for (int i = 0; i < 200; ++i) {
    Rng rng(7000 + static_cast<std::uint64_t>(i));
    const int n = 10 + static_cast<int>(uniform_index(rng, 60));
    std::vector<PatientVolume> p;
    for (int k = 0; k < n; ++k) {
      const double dice = uniform01(rng) < 0.1 ? 0.0 : 1.0 - 0.3 * uniform01(rng);
      p.push_back({"id" + std::to_string(uniform_index(rng, 100000)) + "_" + std::to_string(k),
                   std::round(uniform(rng, 0.1, 10) * 4) / 4, dice});
    }
    const auto bins = volume_bin_analysis(p, 10);
    auto sorted = p;
    std::sort(sorted.begin(), sorted.end(), [](const auto& a, const auto& b) {
      return std::tie(a.volume_ml, a.patient) < std::tie(b.volume_ml, b.patient);
    });
    std::size_t start = 0;
    for (int b = 0; b < 10; ++b) {
      const std::size_t size = static_cast<std::size_t>(n / 10 + (b < n % 10 ? 1 : 0));
      std::vector<double> dice;
      const auto& bin = bins[static_cast<std::size_t>(b)];
      ASSERT_EQ(bin.patients.size(), size);
      for (std::size_t k = 0; k < size; ++k) {
        EXPECT_EQ(bin.patients[k], sorted[start + k].patient);
        dice.push_back(sorted[start + k].dice);
      }
      const auto box = oracle::box(dice);
      EXPECT_NEAR(bin.q1, box.q1, 1e-12);
      EXPECT_NEAR(bin.median, box.median, 1e-12);
      EXPECT_NEAR(bin.q3, box.q3, 1e-12);
      EXPECT_NEAR(bin.whisker_low, box.lo, 1e-12);
      EXPECT_NEAR(bin.whisker_high, box.hi, 1e-12);
      EXPECT_EQ(bin.outliers.size(), box.outliers.size());
      start += size;
    }
  }
}

TEST(Report, TableHeaderAndBestMarker) {
  auto patient = [](const std::string& id, double v) {
    std::vector<PatientMetrics> out;
    for (int k = 0; k < 10; ++k) out.push_back({id, threshold_value(k), v * (k == 4 ? 1.0 : 0.5), v, true, v, v, 1, 0, 0});
    return out;
  };
  const auto r = pooled_estimates({patient("a", 0.8), patient("b", 0.9)});
  const std::string t = format_table(r);
  EXPECT_EQ(t.substr(0, t.find('\n')), "PT | Dice | Dice-TP | F1 | Recall | Precision");
  EXPECT_EQ(r.best, 4);
  EXPECT_NE(t.find("0.5 | 85.00 +- 5.00"), std::string::npos) << t;
  EXPECT_NE(t.find(" | best"), std::string::npos);
}
