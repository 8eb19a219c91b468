#include "hifinet/metrics.hpp"

#include <algorithm>
#include <cmath>

#include "hifinet/edge_classifier.hpp"
#include "hifinet/error.hpp"

namespace hifinet {

std::uint64_t ConfusionMatrix::total() const {
  std::uint64_t s = 0;
  for (auto c : counts) s += c;
  return s;
}

std::uint64_t ConfusionMatrix::fp(std::size_t i) const {
  std::uint64_t s = 0;
  for (std::size_t t = 0; t < k; ++t)
    if (t != i) s += (*this)(t, i);
  return s;
}

std::uint64_t ConfusionMatrix::fn(std::size_t i) const {
  std::uint64_t s = 0;
  for (std::size_t p = 0; p < k; ++p)
    if (p != i) s += (*this)(i, p);
  return s;
}

std::uint64_t ConfusionMatrix::support(std::size_t i) const { return tp(i) + fn(i); }

ConfusionMatrix confusion(std::span<const std::size_t> truth, std::span<const std::size_t> predicted,
                          std::size_t classes) {
  if (truth.size() != predicted.size()) throw InputError("confusion: label vectors differ in length");
  ConfusionMatrix cm(classes);
  for (std::size_t i = 0; i < truth.size(); ++i) {
    if (truth[i] >= classes || predicted[i] >= classes) throw InputError("confusion: class index out of range");
    ++cm(truth[i], predicted[i]);
  }
  return cm;
}

ConfusionMatrix confusion(std::span<const FaultClass> truth, std::span<const FaultClass> predicted) {
  std::vector<std::size_t> t, p;
  for (auto c : truth) t.push_back(class_index(c));
  for (auto c : predicted) p.push_back(class_index(c));
  return confusion(t, p);
}

namespace {
double ratio(std::uint64_t num, std::uint64_t den) {
  return den == 0 ? 0.0 : static_cast<double>(num) / static_cast<double>(den);
}

template <class F>
double weighted(const ConfusionMatrix& cm, F per_class) {
  const auto n = cm.total();
  if (n == 0) throw InputError("metrics: empty confusion matrix");
  double s = 0;
  for (std::size_t i = 0; i < cm.k; ++i) s += ratio(cm.support(i), n) * per_class(cm, i);
  return s;
}
}  // namespace

double accuracy(const ConfusionMatrix& cm) {
  const auto n = cm.total();
  if (n == 0) throw InputError("accuracy: empty confusion matrix");
  std::uint64_t d = 0;
  for (std::size_t i = 0; i < cm.k; ++i) d += cm.tp(i);
  return ratio(d, n);
}

double precision(const ConfusionMatrix& cm, std::size_t i) { return ratio(cm.tp(i), cm.tp(i) + cm.fp(i)); }
double recall(const ConfusionMatrix& cm, std::size_t i) { return ratio(cm.tp(i), cm.tp(i) + cm.fn(i)); }

double f1(const ConfusionMatrix& cm, std::size_t i) {
  const double p = precision(cm, i), r = recall(cm, i);
  return p + r == 0 ? 0.0 : 2 * p * r / (p + r);
}

double weighted_precision(const ConfusionMatrix& cm) {
  return weighted(cm, [](const ConfusionMatrix& c, std::size_t i) { return precision(c, i); });
}
double weighted_recall(const ConfusionMatrix& cm) {
  return weighted(cm, [](const ConfusionMatrix& c, std::size_t i) { return recall(c, i); });
}
double weighted_f1(const ConfusionMatrix& cm) {
  return weighted(cm, [](const ConfusionMatrix& c, std::size_t i) { return f1(c, i); });
}

double trapezoid_area(std::span<const PrPoint> pts) {
  double a = 0;
  for (std::size_t i = 1; i < pts.size(); ++i)
    a += (pts[i].recall - pts[i - 1].recall) * (pts[i].precision + pts[i - 1].precision) / 2;
  return a;
}

namespace {

void check_rows(std::span<const std::size_t> truth, std::span<const std::vector<double>> probs) {
  if (truth.size() != probs.size()) throw InputError("pr curve: label and probability counts differ");
  for (std::size_t i = 0; i < probs.size(); ++i) {
    const auto& row = probs[i];
    if (row.size() != kNumClasses) throw InputError("pr curve: probability row has wrong width");
    double s = 0;
    for (double v : row) {
      if (!std::isfinite(v) || v < 0) throw InputError("pr curve: invalid probability");
      s += v;
    }
    if (std::abs(s - 1.0) > 1e-6) throw InputError("pr curve: row " + std::to_string(i) + " does not sum to 1");
    if (truth[i] >= kNumClasses) throw InputError("pr curve: class index out of range");
  }
}

PrCurve sweep(std::vector<std::pair<double, bool>> pairs) {
  std::size_t positives = 0;
  for (const auto& p : pairs) positives += p.second;
  if (positives == 0) throw DegenerateLabelsError("pr curve: no positive samples");
  std::sort(pairs.begin(), pairs.end(), [](const auto& a, const auto& b) { return a.first > b.first; });
  PrCurve curve;
  std::size_t tp = 0, seen = 0;
  for (std::size_t i = 0; i < pairs.size();) {
    const double thr = pairs[i].first;
    for (; i < pairs.size() && pairs[i].first == thr; ++i) {
      tp += pairs[i].second;
      ++seen;
    }
    curve.points.push_back({thr, ratio(tp, positives), ratio(tp, seen)});
  }
  curve.points.insert(curve.points.begin(), {curve.points.front().threshold, 0.0, curve.points.front().precision});
  curve.auprc = trapezoid_area(curve.points);
  return curve;
}

}  // namespace

PrCurve pr_curve_auprc(std::span<const std::size_t> truth, std::span<const std::vector<double>> probs) {
  check_rows(truth, probs);
  std::vector<std::pair<double, bool>> pairs;
  pairs.reserve(truth.size() * kFaultTypes.size());
  for (std::size_t i = 0; i < truth.size(); ++i)
    for (FaultClass c : kFaultTypes) pairs.emplace_back(probs[i][class_index(c)], truth[i] == class_index(c));
  return sweep(std::move(pairs));
}

PrCurve pr_curve_class(std::span<const std::size_t> truth, std::span<const std::vector<double>> probs,
                       std::size_t cls) {
  check_rows(truth, probs);
  std::vector<std::pair<double, bool>> pairs;
  for (std::size_t i = 0; i < truth.size(); ++i) pairs.emplace_back(probs[i][cls], truth[i] == cls);
  return sweep(std::move(pairs));
}

double f1_drop(double low, double high) { return 100.0 * (low - high); }

MetricsReport make_report(std::span<const std::size_t> truth, std::span<const std::vector<double>> probs,
                          const ReportMeta& meta) {
  check_rows(truth, probs);
  std::vector<std::size_t> pred;
  pred.reserve(probs.size());
  for (const auto& row : probs) pred.push_back(argmax(row));
  MetricsReport r;
  r.meta = meta;
  r.cm = confusion(truth, pred);
  r.accuracy = accuracy(r.cm);
  for (std::size_t i = 0; i < kNumClasses; ++i) {
    r.precision.push_back(precision(r.cm, i));
    r.recall.push_back(recall(r.cm, i));
    r.f1.push_back(f1(r.cm, i));
  }
  r.weighted_precision = weighted_precision(r.cm);
  r.weighted_recall = weighted_recall(r.cm);
  r.weighted_f1 = weighted_f1(r.cm);
  try {
    r.pr = pr_curve_auprc(truth, probs);
    r.auprc = r.pr.auprc;
  } catch (const DegenerateLabelsError&) {
    r.auprc = 0;  // no faulty windows at all
  }
  for (std::size_t c = 0; c < kNumClasses; ++c) {
    try {
      r.pr_per_class.push_back(pr_curve_class(truth, probs, c));
    } catch (const DegenerateLabelsError&) {
      r.pr_per_class.push_back({});
    }
  }
  return r;
}

}  // namespace hifinet
