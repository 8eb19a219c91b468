#include "hifinet/report.hpp"

#include <ostream>

#include "hifinet/error.hpp"
#include "hifinet/io.hpp"

namespace hifinet {

using nlohmann::json;

nlohmann::json report_to_json(const MetricsReport& r) {
  json j;
  j["meta"] = {{"dataset", r.meta.dataset}, {"fault_rate", r.meta.fault_rate}, {"model", r.meta.model}, {"seed", r.meta.seed}};
  j["accuracy"] = r.accuracy;
  j["weighted_precision"] = r.weighted_precision;
  j["weighted_recall"] = r.weighted_recall;
  j["weighted_f1"] = r.weighted_f1;
  j["auprc"] = r.auprc;
  json per = json::array();
  for (std::size_t i = 0; i < r.precision.size(); ++i)
    per.push_back({{"class", std::string(class_name(class_from_index(i)))},
                   {"precision", r.precision[i]},
                   {"recall", r.recall[i]},
                   {"f1", r.f1[i]},
                   {"support", r.cm.support(i)}});
  j["per_class"] = per;
  json cm = json::array();
  for (std::size_t t = 0; t < r.cm.k; ++t) {
    json row = json::array();
    for (std::size_t p = 0; p < r.cm.k; ++p) row.push_back(r.cm(t, p));
    cm.push_back(row);
  }
  j["confusion"] = cm;
  return j;
}

void write_metrics_table_csv(std::ostream& out, std::span<const MetricsReport> reports) {
  out << "metric,model,dataset,rate,value\n";
  for (const auto& r : reports) {
    const std::pair<const char*, double> rows[] = {{"accuracy", r.accuracy},
                                                   {"weighted_precision", r.weighted_precision},
                                                   {"weighted_recall", r.weighted_recall},
                                                   {"weighted_f1", r.weighted_f1},
                                                   {"auprc", r.auprc}};
    for (const auto& [name, v] : rows)
      out << name << ',' << r.meta.model << ',' << r.meta.dataset << ',' << fmt_double(r.meta.fault_rate) << ','
          << fmt_double(v) << '\n';
  }
}

void write_pr_csv(std::ostream& out, const MetricsReport& r) {
  out << "class,threshold,recall,precision\n";
  auto emit = [&](const char* name, const PrCurve& c) {
    for (const auto& p : c.points)
      out << name << ',' << fmt_double(p.threshold) << ',' << fmt_double(p.recall) << ',' << fmt_double(p.precision)
          << '\n';
  };
  emit("micro", r.pr);
  for (std::size_t c = 0; c < r.pr_per_class.size(); ++c)
    emit(std::string(class_name(class_from_index(c))).c_str(), r.pr_per_class[c]);
}

void write_confusion_csv(std::ostream& out, const ConfusionMatrix& cm) {
  out << "true\\predicted";
  for (std::size_t p = 0; p < cm.k; ++p) out << ',' << class_name(class_from_index(p));
  out << '\n';
  for (std::size_t t = 0; t < cm.k; ++t) {
    out << class_name(class_from_index(t));
    for (std::size_t p = 0; p < cm.k; ++p) out << ',' << cm(t, p);
    out << '\n';
  }
}

void write_embeddings_csv(std::ostream& out, std::span<const std::size_t> labels,
                          std::span<const std::vector<double>> embeddings) {
  if (labels.size() != embeddings.size()) throw InputError("embedding export: label count mismatch");
  const std::size_t d = embeddings.empty() ? 0 : embeddings.front().size();
  out << "window_id,label";
  for (std::size_t k = 0; k < d; ++k) out << ",e" << k;
  out << '\n';
  for (std::size_t i = 0; i < labels.size(); ++i) {
    out << i << ',' << class_name(class_from_index(labels[i]));
    for (double v : embeddings[i]) out << ',' << fmt_double(v);
    out << '\n';
  }
}

}  // namespace hifinet
