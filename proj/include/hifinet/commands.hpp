#pragma once

#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "hifinet/config.hpp"
#include "hifinet/pipeline.hpp"

namespace hifinet {

/// Where one experiment keeps its files. Everything lives under
/// workdir / config.output_dir.
struct Layout {
  std::filesystem::path workdir;
  std::filesystem::path root;

  Layout(const std::filesystem::path& workdir, const ExperimentConfig& cfg);
  std::filesystem::path dataset(double rate) const;
  std::filesystem::path models(double rate) const;
  std::filesystem::path reports(double rate) const;
  std::filesystem::path reports_root() const { return root / "reports"; }
  std::filesystem::path synthetic() const { return root / "synthetic"; }
  std::filesystem::path topology() const { return root / "topology.txt"; }
};

/// Progress lines for humans; commands stay silent when unset.
using Progress = std::function<void(const std::string&)>;

struct CommandContext {
  ExperimentConfig config;
  std::filesystem::path workdir = ".";
  std::optional<double> rate;  // restricts per-rate commands to one rate
  Progress progress;
};

void cmd_gen_synthetic(const CommandContext& ctx);
void cmd_inject(const CommandContext& ctx);
void cmd_train_edge(const CommandContext& ctx);
void cmd_train_ign(const CommandContext& ctx);
void cmd_evaluate(const CommandContext& ctx);
void cmd_tradeoff(const CommandContext& ctx);
void cmd_all(const CommandContext& ctx);

/// Manifest written into every output directory.
nlohmann::json manifest(const ExperimentConfig& cfg, const std::string& command);

EdgeStage load_edge(const std::filesystem::path& dir);
IgnModel load_ign(const std::filesystem::path& dir);

}  // namespace hifinet
