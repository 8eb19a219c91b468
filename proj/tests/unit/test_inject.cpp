#include <gtest/gtest.h>

#include <cmath>
#include <numeric>

#include "hifinet/error.hpp"
#include "hifinet/inject.hpp"
#include "hifinet/rng.hpp"

using namespace hifinet;

namespace {

std::size_t diff_count(const std::vector<double>& a, const std::vector<double>& b) {
  std::size_t n = 0;
  for (std::size_t i = 0; i < a.size(); ++i) n += a[i] != b[i];
  return n;
}

std::vector<double> noisy(std::size_t n, double sigma, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<double> v(n);
  for (auto& x : v) x = 20.0 + sigma * rng.normal();
  return v;
}

// Shifted-data form: exact zero for a constant segment.
double variance(std::span<const double> v) {
  double s = 0, s2 = 0;
  for (double x : v) {
    s += x - v[0];
    s2 += (x - v[0]) * (x - v[0]);
  }
  const double n = static_cast<double>(v.size());
  return (s2 - s * s / n) / (n - 1);
}

AlignedPanel clean_panel(std::size_t n_nodes, std::size_t t, double sigma, std::uint64_t seed) {
  AlignedPanel p;
  for (std::size_t i = 0; i < n_nodes; ++i) {
    p.node_ids.push_back(static_cast<int>(i + 1));
    p.values.push_back(noisy(t, sigma, seed + i));
  }
  for (std::size_t k = 0; k < t; ++k) p.grid.push_back(3600.0 * static_cast<double>(k));
  return p;
}

}  // namespace

TEST(Hardover, HandValuesAndDiffCount) {
  const std::vector<double> one{20.0};
  const Episode e0{0, 1};
  EXPECT_DOUBLE_EQ(inject_hardover(one, std::span(&e0, 1), 5.0)[0], 25.0);

  const auto x = noisy(100, 0.3, 1);
  const Episode e{40, 10};
  EXPECT_EQ(inject_hardover(x, std::span(&e, 1), 0.0), x);
  EXPECT_EQ(diff_count(inject_hardover(x, std::span(&e, 1), 5.0), x), 10u);

  const std::vector<Episode> overlap{{10, 10}, {15, 10}};
  EXPECT_THROW(inject_hardover(x, overlap, 5.0), PlanError);
}

TEST(Drift, HandValuesAndSlope) {
  const std::vector<double> flat(60, 20.0);
  const auto y = inject_drift(flat, 5, 50, 0.3);
  EXPECT_DOUBLE_EQ(y[4], 20.0);                  // before onset
  EXPECT_NEAR(y[5 + 9], 23.0, 1e-12);            // n = 10
  // least-squares slope over the episode
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  const double n = 50;
  for (std::size_t k = 0; k < 50; ++k) {
    const double t = static_cast<double>(k), v = y[5 + k];
    sx += t, sy += v, sxx += t * t, sxy += t * v;
  }
  EXPECT_NEAR((n * sxy - sx * sy) / (n * sxx - sx * sx), 0.3, 0.01);
  EXPECT_THROW(inject_drift(flat, 5, 0, 0.3), PlanError);
}

TEST(Spike, HandValuesAndIsolation) {
  const std::vector<double> one{20.0, 20.0, 20.0};
  const std::vector<std::size_t> at{1};
  EXPECT_DOUBLE_EQ(inject_spike(one, at, 3.0)[1], 23.0);
  EXPECT_EQ(inject_spike(one, std::vector<std::size_t>{}, 3.0), one);

  const auto x = noisy(1000, 0.3, 2);
  const std::vector<std::size_t> five{10, 200, 201 + 99, 640, 999};
  EXPECT_EQ(diff_count(inject_spike(x, five, 3.0), x), 5u);
  const std::vector<std::size_t> adjacent{10, 11};
  EXPECT_THROW(inject_spike(x, adjacent, 3.0), PlanError);
}

TEST(Erratic, VarianceRatioAndZeroMean) {
  const double sigma = 0.3;
  const auto x = noisy(500, sigma, 3);
  const Episode e{0, 500};
  const auto y = inject_erratic(x, std::span(&e, 1), 2.0, sigma, 77);
  std::vector<double> added(500);
  for (std::size_t k = 0; k < 500; ++k) added[k] = y[k] - x[k];
  EXPECT_NEAR(variance(added) / (sigma * sigma), 4.0, 4.0 * 0.25);

  EXPECT_EQ(inject_erratic(x, std::vector<Episode>{}, 2.0, sigma, 1), x);
  EXPECT_THROW(inject_erratic(x, std::span(&e, 1), 1.0, sigma, 1), PlanError);

  const std::vector<double> zeros(10000, 0.0);
  const Episode all{0, 10000};
  const auto noise = inject_erratic(zeros, std::span(&all, 1), 2.0, sigma, 5);
  const double mean = std::accumulate(noise.begin(), noise.end(), 0.0) / 1e4;
  EXPECT_LE(std::abs(mean), 3.0 * (2.0 * sigma) / 100.0);
  EXPECT_NEAR(std::sqrt(variance(noise)), 2.0 * sigma, 0.05 * 2.0 * sigma);
}

TEST(Stuck, NearestNormalAndRandom) {
  auto x = noisy(100, 0.3, 4);
  x[29] = 21.7;
  const auto y = inject_stuck(x, 30, 20, StuckMode::NearestNormal, 0);
  for (std::size_t k = 30; k < 50; ++k) EXPECT_EQ(y[k], 21.7);
  EXPECT_EQ(variance(std::span(y).subspan(30, 20)), 0.0);
  EXPECT_EQ(diff_count(y, x), 20u - (x[30] == 21.7));

  // onset at 0 falls back to the first value after the episode
  EXPECT_EQ(inject_stuck(x, 0, 10, StuckMode::NearestNormal, 0)[0], x[10]);
  EXPECT_THROW(inject_stuck(x, 0, 100, StuckMode::NearestNormal, 0), PlanError);

  const auto [lo, hi] = std::minmax_element(x.begin(), x.end());
  const auto r1 = inject_stuck(x, 10, 5, StuckMode::RandomInRange, 9);
  const auto r2 = inject_stuck(x, 10, 5, StuckMode::RandomInRange, 9);
  EXPECT_EQ(r1, r2);
  EXPECT_GE(r1[10], *lo);
  EXPECT_LE(r1[10], *hi);
}

TEST(NoiseEstimate, RecoversSigmaAndIgnoresTrend) {
  auto x = noisy(20000, 0.4, 6);
  for (std::size_t k = 0; k < x.size(); ++k) x[k] += 3.0 * std::sin(2 * M_PI * static_cast<double>(k) / 24.0);
  EXPECT_NEAR(estimate_noise_sigma(x), 0.4, 0.4 * 0.05);
}

TEST(Budget, IntegerPartition) {
  const auto b = split_budget(864);
  std::size_t sum = 0;
  for (const auto& [t, n] : b) {
    EXPECT_TRUE(n == 172 || n == 173);
    sum += n;
  }
  EXPECT_EQ(sum, 864u);
  EXPECT_EQ(b.at(FaultClass::Hardover), 173u);
  EXPECT_EQ(b.at(FaultClass::StuckAt), 172u);
}

TEST(BuildDataset, RateZeroIsIdentity) {
  const auto clean = clean_panel(6, 720, 0.3, 10);
  const auto ds = build_dataset(clean, default_plan(clean.node_ids, 0.0, 24, 1));
  EXPECT_EQ(ds.panel.values, clean.values);
  EXPECT_EQ(ds.mask.faulty_count(), 0u);
}

TEST(BuildDataset, CountsSingleTypeAndLocality) {
  const auto clean = clean_panel(6, 720, 0.3, 20);
  for (double rate : {0.05, 0.10, 0.15, 0.20}) {
    const auto plan = default_plan(clean.node_ids, rate, 24, 3);
    const auto ds = build_dataset(clean, plan);
    const double target = rate * 6 * 720;
    EXPECT_LE(std::abs(static_cast<double>(ds.mask.faulty_count()) - target), 48.0) << rate;
    for (std::size_t i = 0; i < 6; ++i) {
      const FaultClass own = plan.node_to_fault.at(clean.node_ids[i]);
      for (std::size_t k = 0; k < 720; ++k) {
        const FaultClass m = ds.mask.rows[i][k];
        EXPECT_TRUE(m == FaultClass::Normal || m == own);
        // outside the mask nothing moves
        if (m == FaultClass::Normal) EXPECT_EQ(ds.panel.values[i][k], clean.values[i][k]);
      }
    }
  }
  const auto ds = build_dataset(clean, default_plan(clean.node_ids, 0.20, 24, 3));
  EXPECT_EQ(ds.mask.faulty_count(), 864u);
}

TEST(BuildDataset, Deterministic) {
  const auto clean = clean_panel(6, 720, 0.3, 30);
  const auto plan = default_plan(clean.node_ids, 0.15, 24, 8);
  const auto a = build_dataset(clean, plan);
  const auto b = build_dataset(clean, plan);
  EXPECT_EQ(a.panel.values, b.panel.values);
  EXPECT_EQ(a.mask.rows, b.mask.rows);
}

TEST(BuildDataset, PlanErrors) {
  const auto clean = clean_panel(6, 100, 0.3, 40);
  auto plan = default_plan(clean.node_ids, 0.9, 24, 1);
  EXPECT_THROW(build_dataset(clean, plan), PlanError);
  plan.fault_rate = 1.0;
  EXPECT_THROW(plan.validate(), ConfigError);
  plan = default_plan(clean.node_ids, 0.1, 24, 1);
  plan.node_to_fault.erase(1);
  EXPECT_THROW(build_dataset(clean, plan), PlanError);
}

TEST(BuildDataset, StuckAndHardoverEpisodes) {
  auto clean = clean_panel(6, 720, 0.0, 50);
  const auto plan = default_plan(clean.node_ids, 0.2, 24, 4);
  const auto ds = build_dataset(clean, plan);
  for (const auto& ep : ds.episodes) {
    const std::size_t row = clean.index_of(ep.node_id);
    const auto seg = std::span(ds.panel.values[row]).subspan(ep.episode.start, ep.episode.length);
    const auto ref = std::span(clean.values[row]).subspan(ep.episode.start, ep.episode.length);
    if (ep.type == FaultClass::StuckAt && seg.size() > 1) EXPECT_EQ(variance(seg), 0.0);
    if (ep.type == FaultClass::Hardover) {
      double d = 0;
      for (std::size_t k = 0; k < seg.size(); ++k) d += seg[k] - ref[k];
      EXPECT_NEAR(d / static_cast<double>(seg.size()), 5.0, 1e-9);
    }
  }
}
