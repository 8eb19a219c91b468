#include "hifinet/io.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

#include "hifinet/error.hpp"

namespace hifinet {

namespace fs = std::filesystem;

std::string fmt_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

namespace {

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::string cell;
  std::istringstream ss(line);
  while (std::getline(ss, cell, ',')) out.push_back(cell);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

double to_double(const std::string& s, std::size_t line) {
  try {
    std::size_t used = 0;
    double v = std::stod(s, &used);
    if (used != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw IngestError("line " + std::to_string(line) + ": not a number: '" + s + "'");
  }
}

std::string strip_cr(std::string s) {
  if (!s.empty() && s.back() == '\r') s.pop_back();
  return s;
}

std::ifstream open_in(const fs::path& p) {
  std::ifstream in(p);
  if (!in) throw IngestError("cannot open " + p.string());
  return in;
}

std::ofstream open_out(const fs::path& p) {
  if (p.has_parent_path()) fs::create_directories(p.parent_path());
  std::ofstream out(p, std::ios::binary);
  if (!out) throw IngestError("cannot write " + p.string());
  return out;
}

}  // namespace

void write_panel_csv(std::ostream& out, const AlignedPanel& panel) {
  out << "timestamp";
  for (int id : panel.node_ids) out << ',' << id;
  out << '\n';
  for (std::size_t t = 0; t < panel.n_samples(); ++t) {
    out << fmt_double(panel.grid[t]);
    for (std::size_t i = 0; i < panel.n_nodes(); ++i) out << ',' << fmt_double(panel.values[i][t]);
    out << '\n';
  }
}

AlignedPanel read_panel_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw EmptyDatasetError("panel csv is empty");
  auto head = split_csv(strip_cr(line));
  if (head.size() < 2 || head[0] != "timestamp") throw IngestError("line 1: panel header must start with 'timestamp'");
  AlignedPanel p;
  for (std::size_t k = 1; k < head.size(); ++k) p.node_ids.push_back(static_cast<int>(to_double(head[k], 1)));
  p.values.resize(p.node_ids.size());
  std::size_t n = 1;
  while (std::getline(in, line)) {
    ++n;
    line = strip_cr(line);
    if (line.empty()) continue;
    auto cells = split_csv(line);
    if (cells.size() != head.size()) throw IngestError("line " + std::to_string(n) + ": wrong number of columns");
    p.grid.push_back(to_double(cells[0], n));
    for (std::size_t k = 1; k < cells.size(); ++k) p.values[k - 1].push_back(to_double(cells[k], n));
  }
  if (p.grid.empty()) throw EmptyDatasetError("panel csv has no rows");
  p.validate();
  return p;
}

void write_mask_csv(std::ostream& out, const AlignedPanel& panel, const FaultMask& mask) {
  out << "timestamp";
  for (int id : panel.node_ids) out << ',' << id;
  out << '\n';
  for (std::size_t t = 0; t < panel.n_samples(); ++t) {
    out << fmt_double(panel.grid[t]);
    for (std::size_t i = 0; i < panel.n_nodes(); ++i) out << ',' << class_name(mask.rows[i][t]);
    out << '\n';
  }
}

FaultMask read_mask_csv(std::istream& in, const AlignedPanel& panel) {
  std::string line;
  if (!std::getline(in, line)) throw EmptyDatasetError("mask csv is empty");
  auto head = split_csv(strip_cr(line));
  if (head.size() != panel.n_nodes() + 1) throw IngestError("line 1: mask header does not match the panel");
  FaultMask m = FaultMask::all_normal(panel.n_nodes(), 0);
  std::size_t n = 1;
  while (std::getline(in, line)) {
    ++n;
    line = strip_cr(line);
    if (line.empty()) continue;
    auto cells = split_csv(line);
    if (cells.size() != head.size()) throw IngestError("line " + std::to_string(n) + ": wrong number of columns");
    for (std::size_t k = 1; k < cells.size(); ++k) {
      auto c = parse_class(cells[k]);
      if (!c) throw IngestError("line " + std::to_string(n) + ": unknown class '" + cells[k] + "'");
      m.rows[k - 1].push_back(*c);
    }
  }
  for (const auto& r : m.rows)
    if (r.size() != panel.n_samples()) throw IngestError("mask length does not match the panel");
  return m;
}

void write_episodes_csv(std::ostream& out, std::span<const EpisodeRecord> episodes) {
  out << "node_id,type,start,length,parameter\n";
  for (const auto& e : episodes)
    out << e.node_id << ',' << class_name(e.type) << ',' << e.episode.start << ',' << e.episode.length << ','
        << fmt_double(e.parameter) << '\n';
}

void write_json(const fs::path& path, const nlohmann::json& j) {
  auto out = open_out(path);
  out << j.dump(2) << '\n';
}

nlohmann::json read_json(const fs::path& path) {
  auto in = open_in(path);
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw IngestError(path.string() + ": " + e.what());
  }
}

void write_text(const fs::path& path, const std::string& text) {
  auto out = open_out(path);
  out << text;
}

void save_dataset(const fs::path& dir, const InjectedDataset& ds) {
  {
    auto out = open_out(dir / "panel.csv");
    write_panel_csv(out, ds.panel);
  }
  {
    auto out = open_out(dir / "mask.csv");
    write_mask_csv(out, ds.panel, ds.mask);
  }
  auto out = open_out(dir / "episodes.csv");
  write_episodes_csv(out, ds.episodes);
}

InjectedDataset load_dataset(const fs::path& dir) {
  InjectedDataset ds;
  {
    auto in = open_in(dir / "panel.csv");
    ds.panel = read_panel_csv(in);
  }
  auto in = open_in(dir / "mask.csv");
  ds.mask = read_mask_csv(in, ds.panel);
  return ds;
}

nlohmann::json plan_to_json(const InjectionPlan& plan) {
  nlohmann::json j;
  j["fault_rate"] = plan.fault_rate;
  j["seed"] = plan.seed;
  j["node_to_fault"] = nlohmann::json::object();
  for (const auto& [id, c] : plan.node_to_fault) j["node_to_fault"][std::to_string(id)] = std::string(class_name(c));
  const auto& p = plan.params;
  j["params"] = {{"b_hardover", p.b_hardover},
                 {"hardover_range", p.hardover_range},
                 {"hardover_min", p.hardover_min},
                 {"hardover_max", p.hardover_max},
                 {"b_drift", p.b_drift},
                 {"b_spike", p.b_spike},
                 {"erratic_sigma_factor", p.erratic_sigma_factor},
                 {"erratic_factor_is_variance", p.erratic_factor_is_variance},
                 {"stuck_mode", stuck_mode_name(p.stuck_mode)},
                 {"persistent_episode_len", p.persistent_episode_len},
                 {"erratic_episode_len", p.erratic_episode_len}};
  return j;
}

}  // namespace hifinet
