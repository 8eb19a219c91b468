#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "hifinet/energy.hpp"
#include "hifinet/ign.hpp"
#include "hifinet/ingest.hpp"
#include "hifinet/inject.hpp"

namespace hifinet {

inline constexpr const char* kToolkitVersion = "0.1.0";

struct DataConfig {
  std::string source = "synthetic";  // synthetic | intel | csv
  std::string intel_path;
  std::map<int, std::string> csv_paths;  // node id -> file
  SyntheticParams synthetic;
  std::vector<int> nodes;  // empty: the first six (ascending) of the source
  std::optional<TimeRange> time_range;
  double grid_interval_s = 3600;
  double min_valid = -1e300;  // Intel cleaning bounds
  double max_valid = 1e300;
};

struct WindowConfig {
  std::size_t w = 24;
  std::size_t stride = 1;            // train windows
  std::size_t eval_stride = 1;       // test metrics
  std::size_t tradeoff_stride = 0;   // 0 means w
  std::size_t block_len = 48;
  std::size_t test_every = 4;
  // Every holdout_every-th training block is kept out of both stages' training
  // and only scores graph-stage checkpoints, on edge outputs the edge model
  // never fitted. 0 leaves checkpoint selection to a split of the training windows.
  std::size_t holdout_every = 0;
  std::string features = "value+diff";  // "value" or "value+diff"
};

struct InjectionConfig {
  std::vector<double> rates = {0.05, 0.10, 0.15, 0.20};
  FaultParams params;
  std::map<int, FaultClass> node_to_fault;  // empty: default plan
  std::uint64_t seed = 11;
};

struct EdgeConfig {
  std::vector<std::size_t> hidden = {32, 16};
  std::size_t pretrain_epochs = 5;
  std::size_t finetune_epochs = 40;
  double lr = 1e-3;
  std::size_t batch_size = 64;
  std::size_t patience = 10;
  double val_fraction = 0.15;
  bool pretrain_clean_only = false;
};

struct IgnTrainConfig {
  IgnConfig model;
  std::size_t epochs = 60;
  double lr = 1e-3;
  std::size_t batch_size = 16;
  std::size_t patience = 10;
  double val_fraction = 0.15;
  double temp_loss_weight = 0.0;
};

struct TopologyConfig {
  std::string path;  // empty: grid layout
  double spacing = 40;
  double radius = 60;
};

struct EnergyConfig {
  EnergyParams params;
  std::vector<std::size_t> t_values = {0, 1, 2, 3, 4, 5, 6, 7, 8, 9};
};

struct ExperimentConfig {
  std::uint64_t seed = 7;
  DataConfig data;
  WindowConfig window;
  InjectionConfig injection;
  EdgeConfig edge;
  IgnTrainConfig ign;
  TopologyConfig topology;
  EnergyConfig energy;
  std::string output_dir = "out";

  /// Throws ConfigError. Relative paths resolve against `base`.
  void validate(const std::filesystem::path& base = {}) const;
  std::size_t input_dim() const { return window.features == "value" ? 1 : 2; }
  std::size_t tradeoff_stride() const { return window.tradeoff_stride ? window.tradeoff_stride : window.w; }
};

/// Unknown keys and wrongly typed values are ConfigErrors.
ExperimentConfig config_from_json(const nlohmann::json& j);
nlohmann::json config_to_json(const ExperimentConfig& c);
ExperimentConfig load_config(const std::filesystem::path& path, const std::vector<std::string>& overrides = {});

/// Applies "a.b.c=value" to a JSON document; the value is parsed as JSON when
/// possible and taken as a string otherwise.
void apply_override(nlohmann::json& j, const std::string& assignment);

/// FNV-1a of the canonical JSON rendering, as 16 hex digits.
std::string config_hash(const ExperimentConfig& c);

std::string rate_tag(double rate);  // 0.05 -> "rate_0.05"

}  // namespace hifinet
