#pragma once

// Brute-force metric oracles shared by the unit tests and the acceptance suite.

#include <algorithm>
#include <set>
#include <vector>

#include "hifinet/rng.hpp"

namespace hifinet::testing {


struct Sample {
  std::vector<std::size_t> truth, pred;
  std::vector<std::vector<double>> probs;
};

inline Sample random_sample(std::size_t n, std::uint64_t seed, bool coarse = false) {
  Rng rng(seed);
  Sample s;
  for (std::size_t i = 0; i < n; ++i) {
    s.truth.push_back(rng.below(6));
    std::vector<double> p(6);
    double sum = 0;
    for (auto& v : p) {
      // coarse scores force ties
      v = coarse ? static_cast<double>(1 + rng.below(3)) : rng.uniform(0.01, 1.0);
      sum += v;
    }
    for (auto& v : p) v /= sum;
    s.pred.push_back(static_cast<std::size_t>(std::max_element(p.begin(), p.end()) - p.begin()));
    s.probs.push_back(std::move(p));
  }
  return s;
}

// Per-class tallies straight from the label lists.
struct Tally {
  double tp[6] = {}, fp[6] = {}, fn[6] = {}, n[6] = {};
  double total = 0, correct = 0;
  Tally(const std::vector<std::size_t>& t, const std::vector<std::size_t>& p) {
    for (std::size_t i = 0; i < t.size(); ++i) {
      n[t[i]] += 1;
      total += 1;
      if (t[i] == p[i]) {
        tp[t[i]] += 1;
        correct += 1;
      } else {
        fp[p[i]] += 1;
        fn[t[i]] += 1;
      }
    }
  }
  double prec(int c) const { return tp[c] + fp[c] > 0 ? tp[c] / (tp[c] + fp[c]) : 0; }
  double rec(int c) const { return tp[c] + fn[c] > 0 ? tp[c] / (tp[c] + fn[c]) : 0; }
  double f1(int c) const { return prec(c) + rec(c) > 0 ? 2 * prec(c) * rec(c) / (prec(c) + rec(c)) : 0; }
  double weighted(double (Tally::*m)(int) const) const {
    double s = 0;
    for (int c = 0; c < 6; ++c) s += n[c] / total * (this->*m)(c);
    return s;
  }
};

// Every distinct pooled score as a threshold, counted from scratch each time.
inline double brute_auprc(const std::vector<std::size_t>& truth, const std::vector<std::vector<double>>& probs,
                   const std::vector<std::size_t>& classes) {
  std::vector<std::pair<double, bool>> pool;
  for (std::size_t i = 0; i < truth.size(); ++i)
    for (std::size_t c : classes) pool.emplace_back(probs[i][c], truth[i] == c);
  double positives = 0;
  for (const auto& [s, y] : pool) positives += y;
  std::set<double, std::greater<>> thresholds;
  for (const auto& [s, y] : pool) thresholds.insert(s);
  std::vector<std::pair<double, double>> rp;  // recall, precision
  for (double th : thresholds) {
    double tp = 0, pp = 0;
    for (const auto& [s, y] : pool)
      if (s >= th) {
        pp += 1;
        tp += y;
      }
    rp.emplace_back(tp / positives, tp / pp);
  }
  double area = 0, r0 = 0, p0 = rp.front().second;
  for (const auto& [r, p] : rp) {
    area += (r - r0) * (p + p0) / 2;
    r0 = r;
    p0 = p;
  }
  return area;
}

}  // namespace hifinet::testing
