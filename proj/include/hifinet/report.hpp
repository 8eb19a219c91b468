#pragma once

#include <iosfwd>
#include <span>
#include <vector>

#include <nlohmann/json.hpp>

#include "hifinet/metrics.hpp"

namespace hifinet {

nlohmann::json report_to_json(const MetricsReport& r);

/// Long-format grid: metric,model,dataset,rate,value.
void write_metrics_table_csv(std::ostream& out, std::span<const MetricsReport> reports);

/// class,threshold,recall,precision; the pooled fault curve uses class "micro".
void write_pr_csv(std::ostream& out, const MetricsReport& r);

/// Square grid with class names on both axes (rows true, columns predicted).
void write_confusion_csv(std::ostream& out, const ConfusionMatrix& cm);

/// window_id,label,e0,e1,... for external embedding visualisation.
void write_embeddings_csv(std::ostream& out, std::span<const std::size_t> labels,
                          std::span<const std::vector<double>> embeddings);

}  // namespace hifinet
