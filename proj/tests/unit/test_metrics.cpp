#include <gtest/gtest.h>

#include "hifinet/error.hpp"
#include "hifinet/metrics.hpp"
#include "hifinet/rng.hpp"
#include "metric_oracles.hpp"

using namespace hifinet;
using namespace hifinet::testing;

TEST(Confusion, PerfectConstantAndTally) {
  const std::vector<std::size_t> t{0, 1, 2, 3, 4, 5, 1};
  const auto cm = confusion(t, t);
  for (std::size_t i = 0; i < 6; ++i)
    for (std::size_t j = 0; j < 6; ++j)
      if (i != j) EXPECT_EQ(cm(i, j), 0u);
  EXPECT_EQ(cm.total(), 7u);

  const std::vector<std::size_t> zeros(t.size(), 0);
  const auto c0 = confusion(t, zeros);
  for (std::size_t i = 0; i < 6; ++i)
    for (std::size_t j = 1; j < 6; ++j) EXPECT_EQ(c0(i, j), 0u);

  const auto s = random_sample(100, 1);
  const auto cm2 = confusion(s.truth, s.pred);
  for (std::size_t i = 0; i < 6; ++i)
    for (std::size_t j = 0; j < 6; ++j) {
      std::uint64_t n = 0;
      for (std::size_t k = 0; k < 100; ++k) n += s.truth[k] == i && s.pred[k] == j;
      EXPECT_EQ(cm2(i, j), n);
    }
}

TEST(Accuracy, DefinitionAndEmpty) {
  std::vector<std::size_t> t(100, 0), p(100, 0);
  for (int i = 0; i < 10; ++i) p[i] = 1;
  EXPECT_DOUBLE_EQ(accuracy(confusion(t, p)), 0.9);
  EXPECT_THROW(accuracy(ConfusionMatrix{}), InputError);
}

TEST(Weighted, TwoClassToyAndLoneClass) {
  // class 0: 3 samples, precision 1; class 1: 1 sample, precision 0.5
  const std::vector<std::size_t> t{0, 0, 0, 1}, p{0, 0, 1, 1};
  const auto cm = confusion(t, p, 2);
  EXPECT_DOUBLE_EQ(weighted_precision(cm), 0.75 * 1.0 + 0.25 * 0.5);
  EXPECT_DOUBLE_EQ(weighted_precision(cm), 0.875);

  // precision 1, recall 0.5 -> F1 = 2/3
  const std::vector<std::size_t> t2{0, 0}, p2{0, 1};
  EXPECT_NEAR(f1(confusion(t2, p2, 2), 0), 2.0 / 3.0, 1e-15);

  const std::vector<std::size_t> all{0, 1, 2, 3, 4, 5};
  EXPECT_DOUBLE_EQ(weighted_precision(confusion(all, all)), 1.0);
  EXPECT_DOUBLE_EQ(weighted_f1(confusion(all, all)), 1.0);
}

TEST(Weighted, AllOneClassPrediction) {
  const auto s = random_sample(60, 4);
  const std::vector<std::size_t> twos(60, 2);
  const Tally o(s.truth, twos);
  const double expect = o.n[2] / o.total * (o.tp[2] / 60.0);
  EXPECT_NEAR(weighted_precision(confusion(s.truth, twos)), expect, 1e-12);
}

TEST(Metrics, MatchBruteForceOn50Samples) {
  for (std::uint64_t seed = 0; seed < 30; ++seed) {
    const auto s = random_sample(50, 100 + seed, seed % 2 == 0);
    const auto cm = confusion(s.truth, s.pred);
    const Tally o(s.truth, s.pred);
    EXPECT_NEAR(accuracy(cm), o.correct / o.total, 1e-9);
    EXPECT_NEAR(weighted_precision(cm), o.weighted(&Tally::prec), 1e-9);
    EXPECT_NEAR(weighted_recall(cm), o.weighted(&Tally::rec), 1e-9);
    EXPECT_NEAR(weighted_f1(cm), o.weighted(&Tally::f1), 1e-9);
    EXPECT_NEAR(pr_curve_auprc(s.truth, s.probs).auprc, brute_auprc(s.truth, s.probs, {1, 2, 3, 4, 5}), 1e-9);
    for (std::size_t c = 0; c < 6; ++c) {
      bool any = false;
      for (auto t : s.truth) any |= t == c;
      if (any) EXPECT_NEAR(pr_curve_class(s.truth, s.probs, c).auprc, brute_auprc(s.truth, s.probs, {c}), 1e-9);
    }
  }
}

TEST(Metrics, InvariantUnderRelabeling) {
  const auto s = random_sample(80, 9);
  const std::vector<std::size_t> perm{3, 5, 0, 1, 4, 2};
  std::vector<std::size_t> t2, p2;
  for (std::size_t i = 0; i < 80; ++i) {
    t2.push_back(perm[s.truth[i]]);
    p2.push_back(perm[s.pred[i]]);
  }
  const auto a = confusion(s.truth, s.pred), b = confusion(t2, p2);
  EXPECT_NEAR(accuracy(a), accuracy(b), 1e-15);
  EXPECT_NEAR(weighted_precision(a), weighted_precision(b), 1e-12);
  EXPECT_NEAR(weighted_f1(a), weighted_f1(b), 1e-12);
}

TEST(Auprc, PerfectUniformAndErrors) {
  std::vector<std::size_t> t;
  std::vector<std::vector<double>> perfect, uniform;
  for (std::size_t i = 0; i < 60; ++i) {
    t.push_back(i % 6);
    std::vector<double> row(6, 0.0);
    row[i % 6] = 1.0;
    perfect.push_back(row);
    uniform.emplace_back(6, 1.0 / 6.0);
  }
  EXPECT_NEAR(pr_curve_auprc(t, perfect).auprc, 1.0, 1e-12);
  // pooled prevalence: 50 positives among 60 x 5 pairs
  EXPECT_NEAR(pr_curve_auprc(t, uniform).auprc, 50.0 / 300.0, 0.02);

  auto bad = uniform;
  bad[3][0] += 0.01;
  EXPECT_THROW(pr_curve_auprc(t, bad), InputError);
  const std::vector<std::size_t> normal_only(60, 0);
  EXPECT_THROW(pr_curve_auprc(normal_only, uniform), DegenerateLabelsError);
}

TEST(F1Drop, Values) {
  EXPECT_NEAR(f1_drop(0.9470, 0.9264), 2.06, 1e-9);
  EXPECT_EQ(f1_drop(0.9, 0.9), 0.0);
}

TEST(Report, Consistent) {
  const auto s = random_sample(50, 21);
  const auto r = make_report(s.truth, s.probs, ReportMeta{"synthetic", 0.2, "hifinet", 7});
  const auto cm = confusion(s.truth, s.pred);
  EXPECT_NEAR(r.accuracy, accuracy(cm), 1e-15);
  EXPECT_NEAR(r.weighted_f1, weighted_f1(cm), 1e-15);
  for (double v : {r.accuracy, r.weighted_precision, r.weighted_f1, r.auprc}) {
    EXPECT_GE(v, 0.0);
    EXPECT_LE(v, 1.0);
  }
}
