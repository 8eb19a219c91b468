#pragma once

#include <filesystem>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "hifinet/fault.hpp"
#include "hifinet/ingest.hpp"
#include "hifinet/inject.hpp"

namespace hifinet {

/// "%.17g": round-trips every double and never depends on locale state.
std::string fmt_double(double v);

/// Header "timestamp,<id>,<id>,..."; one row per grid point.
void write_panel_csv(std::ostream& out, const AlignedPanel& panel);
AlignedPanel read_panel_csv(std::istream& in);

/// Same layout as the panel with class names in the cells.
void write_mask_csv(std::ostream& out, const AlignedPanel& panel, const FaultMask& mask);
FaultMask read_mask_csv(std::istream& in, const AlignedPanel& panel);

void write_episodes_csv(std::ostream& out, std::span<const EpisodeRecord> episodes);

/// Pretty JSON with a trailing newline; the parent directory is created.
void write_json(const std::filesystem::path& path, const nlohmann::json& j);
nlohmann::json read_json(const std::filesystem::path& path);
void write_text(const std::filesystem::path& path, const std::string& text);

/// panel.csv, mask.csv, episodes.csv in `dir`.
void save_dataset(const std::filesystem::path& dir, const InjectedDataset& ds);
InjectedDataset load_dataset(const std::filesystem::path& dir);

nlohmann::json plan_to_json(const InjectionPlan& plan);

}  // namespace hifinet
