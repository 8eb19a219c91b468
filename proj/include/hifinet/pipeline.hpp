#pragma once

#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "hifinet/config.hpp"
#include "hifinet/edge_classifier.hpp"
#include "hifinet/energy.hpp"
#include "hifinet/ign.hpp"
#include "hifinet/ingest.hpp"
#include "hifinet/inject.hpp"
#include "hifinet/metrics.hpp"
#include "hifinet/topology.hpp"

namespace hifinet {

/// Clean panel per the data section; paths resolve against `base`.
AlignedPanel load_clean_panel(const ExperimentConfig& cfg, const std::filesystem::path& base = {});

Topology make_topology(const ExperimentConfig& cfg, std::span<const int> node_ids,
                       const std::filesystem::path& base = {});

InjectionPlan make_plan(const ExperimentConfig& cfg, std::span<const int> node_ids, double rate);

/// How windows become LSTM inputs: per-node z-scored values and, in
/// "value+diff" mode, first differences scaled by their train-split std.
struct FeatureSpec {
  std::string mode = "value+diff";
  std::size_t w = 24;
  Normalizer norm;
  std::vector<double> diff_scale;

  std::size_t dim() const { return mode == "value" ? 1 : 2; }
  static FeatureSpec fit(const AlignedPanel& panel, const BlockSplit& split, const std::string& mode, std::size_t w);
  /// One row per (node, start) pair, in the given order.
  SequenceBatch batch(const AlignedPanel& panel, std::span<const std::pair<std::size_t, std::size_t>> items) const;
  nlohmann::json to_json() const;
  static FeatureSpec from_json(const nlohmann::json& j);
};

/// Window starts by purpose, all on the blocked train/test split. `train`
/// feeds both stages; `holdout` (empty when window.holdout_every is 0) only
/// validates the graph stage.
struct WindowIndex {
  std::vector<std::size_t> train;
  std::vector<std::size_t> holdout;
  std::vector<std::size_t> test;
  std::vector<std::size_t> tradeoff;
};
WindowIndex index_windows(const ExperimentConfig& cfg, std::size_t n_samples);
BlockSplit block_split(const ExperimentConfig& cfg);

using LogSink = std::function<void(const EpochRecord&)>;

struct EdgeStage {
  EdgeModel model;
  FeatureSpec features;
  FineTuneResult result;
};

EdgeStage train_edge_stage(const ExperimentConfig& cfg, const InjectedDataset& ds, const LogSink& log = {});

/// Edge outputs for every node at each start: result[k][i] is node i at starts[k].
std::vector<std::vector<EdgeOutput>> edge_outputs(EdgeModel& model, const FeatureSpec& features,
                                                  const AlignedPanel& panel, std::span<const std::size_t> starts);

std::vector<std::vector<std::size_t>> window_labels(const InjectedDataset& ds, std::size_t w,
                                                    std::span<const std::size_t> starts);

std::vector<GraphSample> graph_samples(const std::vector<std::vector<EdgeOutput>>& outputs,
                                       const std::vector<std::vector<std::size_t>>& labels,
                                       std::span<const std::size_t> groups = {});

struct IgnStage {
  IgnModel model;
  IgnTrainResult result;
};

IgnStage train_ign_stage(const ExperimentConfig& cfg, const InjectedDataset& ds, EdgeModel& edge,
                         const FeatureSpec& features, const Topology& topo, const LogSink& log = {});

struct Evaluation {
  MetricsReport edge;
  MetricsReport hifinet;
  std::vector<std::size_t> labels;               // flattened start-major
  std::vector<std::vector<double>> embeddings;   // graph embedding per evaluated node window
  std::vector<WindowPredictions> tradeoff_windows;
};

Evaluation evaluate_stage(const ExperimentConfig& cfg, const InjectedDataset& ds, EdgeModel& edge,
                          const FeatureSpec& features, IgnModel& ign, const Topology& topo, double rate);

/// The whole per-rate chain in memory, without touching the filesystem.
struct RateResult {
  double rate = 0;
  Evaluation eval;
  std::vector<TradeoffRow> tradeoff;
};
RateResult run_rate(const ExperimentConfig& cfg, const AlignedPanel& clean, const Topology& topo, double rate,
                    const LogSink& log = {});

std::vector<double> softmax_row(std::span<const double> logits);

}  // namespace hifinet

namespace hifinet {

/// Attention mask in the panel's node order.
nn::Tensor mask_for(const Topology& topo, std::span<const int> node_ids, bool self_loops);

/// HIFINET_WORKERS when set (>= 1), else the hardware thread count.
std::size_t worker_count();

}  // namespace hifinet
