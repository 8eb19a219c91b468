#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "hifinet/fault.hpp"

namespace hifinet {

/// Rows are true classes, columns predicted classes.
struct ConfusionMatrix {
  std::size_t k = kNumClasses;
  std::vector<std::uint64_t> counts;  // k * k

  explicit ConfusionMatrix(std::size_t classes = kNumClasses) : k(classes), counts(classes * classes, 0) {}
  std::uint64_t operator()(std::size_t t, std::size_t p) const { return counts[t * k + p]; }
  std::uint64_t& operator()(std::size_t t, std::size_t p) { return counts[t * k + p]; }
  std::uint64_t total() const;
  std::uint64_t tp(std::size_t i) const { return (*this)(i, i); }
  std::uint64_t fp(std::size_t i) const;
  std::uint64_t fn(std::size_t i) const;
  std::uint64_t support(std::size_t i) const;  // N_i
};

ConfusionMatrix confusion(std::span<const std::size_t> truth, std::span<const std::size_t> predicted,
                          std::size_t classes = kNumClasses);
ConfusionMatrix confusion(std::span<const FaultClass> truth, std::span<const FaultClass> predicted);

double accuracy(const ConfusionMatrix& cm);  // throws InputError when empty
// Zero denominators yield 0.
double precision(const ConfusionMatrix& cm, std::size_t i);
double recall(const ConfusionMatrix& cm, std::size_t i);
double f1(const ConfusionMatrix& cm, std::size_t i);
double weighted_precision(const ConfusionMatrix& cm);
double weighted_recall(const ConfusionMatrix& cm);
double weighted_f1(const ConfusionMatrix& cm);

struct PrPoint {
  double threshold = 0;
  double recall = 0;
  double precision = 0;
};

struct PrCurve {
  std::vector<PrPoint> points;  // recall non-decreasing; first point has recall 0
  double auprc = 0;
};

/// Micro-averaged one-vs-rest curve over the fault classes: every
/// (P[i][c], truth[i] == c) pair for c != Normal is pooled and thresholds
/// sweep the distinct scores from high to low. Rows must sum to 1 +- 1e-6.
PrCurve pr_curve_auprc(std::span<const std::size_t> truth, std::span<const std::vector<double>> probabilities);

/// One-vs-rest curve for a single class.
PrCurve pr_curve_class(std::span<const std::size_t> truth, std::span<const std::vector<double>> probabilities,
                       std::size_t cls);

/// Trapezoidal area of a curve already ordered by recall.
double trapezoid_area(std::span<const PrPoint> points);

/// Weighted-F1 drop between two fault rates, in percentage points.
double f1_drop(double weighted_f1_low_rate, double weighted_f1_high_rate);

struct ReportMeta {
  std::string dataset;
  double fault_rate = 0;
  std::string model;
  std::uint64_t seed = 0;
};

struct MetricsReport {
  ReportMeta meta;
  double accuracy = 0;
  std::vector<double> precision;
  std::vector<double> recall;
  std::vector<double> f1;
  double weighted_precision = 0;
  double weighted_recall = 0;
  double weighted_f1 = 0;
  double auprc = 0;
  ConfusionMatrix cm;
  PrCurve pr;
  std::vector<PrCurve> pr_per_class;  // index 0 (Normal) included
};

MetricsReport make_report(std::span<const std::size_t> truth, std::span<const std::vector<double>> probabilities,
                          const ReportMeta& meta);

}  // namespace hifinet
