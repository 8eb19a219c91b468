#include "hifinet/ingest.hpp"

#include <algorithm>
#include <cctype>
#include <cerrno>
#include <charconv>
#include <chrono>
#include <cmath>
#include <fstream>
#include <map>
#include <numbers>
#include <numeric>
#include <sstream>

#include "hifinet/error.hpp"
#include "hifinet/rng.hpp"

namespace hifinet {

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

std::optional<double> parse_double(std::string_view text) {
  text = trim(text);
  if (text.empty()) return std::nullopt;
  std::string buf(text);
  char* end = nullptr;
  errno = 0;
  const double v = std::strtod(buf.c_str(), &end);
  if (end != buf.c_str() + buf.size() || errno == ERANGE || !std::isfinite(v)) return std::nullopt;
  return v;
}

std::optional<long long> parse_int(std::string_view text) {
  text = trim(text);
  long long v = 0;
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (ec != std::errc{} || ptr != text.data() + text.size()) return std::nullopt;
  return v;
}

// "YYYY-MM-DD" -> days since epoch.
std::optional<long long> parse_date(std::string_view text) {
  if (text.size() != 10 || text[4] != '-' || text[7] != '-') return std::nullopt;
  auto y = parse_int(text.substr(0, 4));
  auto m = parse_int(text.substr(5, 2));
  auto d = parse_int(text.substr(8, 2));
  if (!y || !m || !d) return std::nullopt;
  using namespace std::chrono;
  const year_month_day ymd{year{static_cast<int>(*y)}, month{static_cast<unsigned>(*m)},
                           day{static_cast<unsigned>(*d)}};
  if (!ymd.ok()) return std::nullopt;
  return sys_days{ymd}.time_since_epoch().count();
}

// "HH:MM:SS[.fff]" -> seconds of day.
std::optional<double> parse_clock(std::string_view text) {
  if (text.size() < 8 || text[2] != ':' || text[5] != ':') return std::nullopt;
  auto h = parse_int(text.substr(0, 2));
  auto m = parse_int(text.substr(3, 2));
  if (!h || !m || *h < 0 || *h > 23 || *m < 0 || *m > 59) return std::nullopt;
  std::string_view sec_text = text.substr(6);
  if (sec_text.size() < 2 || !std::isdigit(static_cast<unsigned char>(sec_text[0])) ||
      !std::isdigit(static_cast<unsigned char>(sec_text[1])))
    return std::nullopt;
  auto s = parse_double(sec_text);
  if (!s || *s < 0 || *s >= 61) return std::nullopt;
  return static_cast<double>(*h * 3600 + *m * 60) + *s;
}

void sort_dedup_last_wins(ReadingSeries& series) {
  std::vector<std::size_t> order(series.timestamps.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return series.timestamps[a] < series.timestamps[b];
  });
  ReadingSeries out;
  out.node_id = series.node_id;
  for (std::size_t idx : order) {
    const double t = series.timestamps[idx];
    if (!out.timestamps.empty() && out.timestamps.back() == t) {
      out.values.back() = series.values[idx];  // stable order keeps file order: last wins
    } else {
      out.timestamps.push_back(t);
      out.values.push_back(series.values[idx]);
    }
  }
  series = std::move(out);
}

std::size_t sample_count(double span_s, double interval_s) {
  return static_cast<std::size_t>(std::floor(span_s / interval_s + 1e-9));
}

}  // namespace

void ReadingSeries::validate() const {
  if (values.empty()) throw IngestError("node " + std::to_string(node_id) + ": empty series");
  if (values.size() != timestamps.size())
    throw IngestError("node " + std::to_string(node_id) + ": timestamp/value length mismatch");
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (!std::isfinite(values[i]) || !std::isfinite(timestamps[i]))
      throw IngestError("node " + std::to_string(node_id) + ": non-finite reading");
    if (i > 0 && timestamps[i] <= timestamps[i - 1])
      throw IngestError("node " + std::to_string(node_id) + ": timestamps not strictly increasing");
  }
}

std::size_t AlignedPanel::index_of(int node_id) const {
  auto it = std::find(node_ids.begin(), node_ids.end(), node_id);
  if (it == node_ids.end()) throw InputError("node " + std::to_string(node_id) + " not in panel");
  return static_cast<std::size_t>(it - node_ids.begin());
}

void AlignedPanel::validate() const {
  if (values.size() != node_ids.size()) throw InputError("panel row count differs from node count");
  for (const auto& row : values) {
    if (row.size() != grid.size()) throw InputError("panel row length differs from grid length");
    for (double v : row)
      if (!std::isfinite(v)) throw InputError("panel contains a non-finite value");
  }
}

std::optional<double> parse_timestamp(std::string_view text) {
  text = trim(text);
  if (text.empty()) return std::nullopt;
  if (text.size() >= 10 && text[4] == '-' && text[7] == '-') {
    auto days = parse_date(text.substr(0, 10));
    if (!days) return std::nullopt;
    double seconds = static_cast<double>(*days) * 86400.0;
    if (text.size() == 10) return seconds;
    if (text[10] != 'T' && text[10] != ' ') return std::nullopt;
    std::string_view clock = text.substr(11);
    if (!clock.empty() && (clock.back() == 'Z' || clock.back() == 'z')) clock.remove_suffix(1);
    auto sod = parse_clock(clock);
    if (!sod) return std::nullopt;
    return seconds + *sod;
  }
  return parse_double(text);
}

IntelParseResult parse_intel(std::istream& in, const IntelParseOptions& options) {
  std::map<int, ReadingSeries> by_node;
  IntelParseResult result;
  std::string line;
  while (std::getline(in, line)) {
    if (trim(line).empty()) continue;
    std::istringstream fields(line);
    std::vector<std::string> tok;
    for (std::string f; fields >> f;) tok.push_back(std::move(f));
    bool ok = tok.size() == 8;
    std::optional<long long> days, mote;
    std::optional<double> clock, temp;
    if (ok) {
      days = parse_date(tok[0]);
      clock = parse_clock(tok[1]);
      mote = parse_int(tok[3]);
      temp = parse_double(tok[4]);
      ok = days && clock && parse_int(tok[2]) && mote && temp && parse_double(tok[5]) &&
           parse_double(tok[6]) && parse_double(tok[7]);
    }
    if (ok && (*temp < options.min_valid || *temp > options.max_valid)) ok = false;
    if (!ok) {
      ++result.dropped_count;
      continue;
    }
    auto& s = by_node[static_cast<int>(*mote)];
    s.node_id = static_cast<int>(*mote);
    s.timestamps.push_back(static_cast<double>(*days) * 86400.0 + *clock);
    s.values.push_back(*temp);
    ++result.valid_count;
  }
  if (result.valid_count == 0) throw EmptyDatasetError("no valid Intel Lab records");
  for (auto& [id, s] : by_node) {
    sort_dedup_last_wins(s);
    result.series.push_back(std::move(s));
  }
  return result;
}

IntelParseResult parse_intel(const std::filesystem::path& path, const IntelParseOptions& options) {
  std::ifstream in(path);
  if (!in) throw IngestError("cannot read " + path.string());
  return parse_intel(in, options);
}

ReadingSeries parse_node_csv(std::istream& in, int node_id) {
  std::string line;
  if (!std::getline(in, line)) throw IngestError("line 1: missing header \"timestamp,value\"");
  {
    std::string header;
    for (char c : line)
      if (!std::isspace(static_cast<unsigned char>(c))) header.push_back(c);
    if (header != "timestamp,value")
      throw IngestError("line 1: header must be \"timestamp,value\", got \"" + std::string(trim(line)) + "\"");
  }
  ReadingSeries series;
  series.node_id = node_id;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    const auto comma = line.find(',');
    if (comma == std::string::npos || line.find(',', comma + 1) != std::string::npos)
      throw IngestError("line " + std::to_string(line_no) + ": expected two columns");
    auto t = parse_timestamp(std::string_view(line).substr(0, comma));
    if (!t) throw IngestError("line " + std::to_string(line_no) + ": unparseable timestamp");
    auto v = parse_double(std::string_view(line).substr(comma + 1));
    if (!v) throw IngestError("line " + std::to_string(line_no) + ": unparseable value");
    series.timestamps.push_back(*t);
    series.values.push_back(*v);
  }
  if (series.values.empty()) throw EmptyDatasetError("node " + std::to_string(node_id) + ": no rows");
  sort_dedup_last_wins(series);
  return series;
}

ReadingSeries parse_node_csv(const std::filesystem::path& path, int node_id) {
  std::ifstream in(path);
  if (!in) throw IngestError("cannot read " + path.string());
  return parse_node_csv(in, node_id);
}

std::vector<ReadingSeries> generate_synthetic(const SyntheticParams& p) {
  if (p.n_nodes < 1) throw ConfigError("synthetic: n_nodes must be >= 1");
  if (!(p.n_days > 0)) throw ConfigError("synthetic: n_days must be positive");
  if (!(p.sample_interval_s > 0)) throw ConfigError("synthetic: sample_interval_s must be positive");
  if (!(p.noise_sigma >= 0) || !(p.node_offset_sigma >= 0))
    throw ConfigError("synthetic: noise parameters must be non-negative");
  const std::size_t n = sample_count(p.n_days * 86400.0, p.sample_interval_s);
  if (n == 0) throw ConfigError("synthetic: fewer than one sample per node");

  std::vector<ReadingSeries> out;
  out.reserve(p.n_nodes);
  for (std::size_t node = 0; node < p.n_nodes; ++node) {
    ReadingSeries s;
    s.node_id = static_cast<int>(node + 1);
    Rng rng(derive_seed(p.seed, static_cast<std::uint64_t>(s.node_id)));
    const double offset = p.node_offset_sigma * rng.normal();
    s.timestamps.resize(n);
    s.values.resize(n);
    for (std::size_t k = 0; k < n; ++k) {
      const double t_rel = static_cast<double>(k) * p.sample_interval_s;
      const double daily = p.daily_amplitude * std::sin(2.0 * std::numbers::pi * t_rel / 86400.0);
      s.timestamps[k] = p.start_epoch + t_rel;
      s.values[k] = p.base_temp + offset + daily + p.noise_sigma * rng.normal();
    }
    out.push_back(std::move(s));
  }
  return out;
}

AlignedPanel align(std::span<const ReadingSeries> series, double grid_interval_s,
                   std::optional<TimeRange> range) {
  if (!(grid_interval_s > 0)) throw ConfigError("align: grid interval must be positive");
  if (series.empty()) throw AlignmentError("align: no series");
  for (const auto& s : series) s.validate();

  TimeRange r;
  if (range) {
    r = *range;
  } else {
    r.start = series.front().timestamps.front();
    r.end = series.front().timestamps.back();
    for (const auto& s : series) {
      r.start = std::min(r.start, s.timestamps.front());
      r.end = std::max(r.end, s.timestamps.back());
    }
  }
  if (!(r.end >= r.start)) throw ConfigError("align: empty time range");

  AlignedPanel panel;
  const std::size_t n = sample_count(r.end - r.start, grid_interval_s) + 1;
  panel.grid.resize(n);
  for (std::size_t k = 0; k < n; ++k) panel.grid[k] = r.start + static_cast<double>(k) * grid_interval_s;

  for (const auto& s : series) {
    const auto& ts = s.timestamps;
    auto first_in = std::lower_bound(ts.begin(), ts.end(), r.start);
    if (first_in == ts.end() || *first_in > r.end)
      throw AlignmentError("align: node " + std::to_string(s.node_id) + " has no readings in range");
    std::vector<double> row(n);
    for (std::size_t k = 0; k < n; ++k) {
      const double t = panel.grid[k];
      auto hi = std::upper_bound(ts.begin(), ts.end(), t);
      if (hi == ts.begin()) {
        row[k] = s.values.front();
      } else if (hi == ts.end()) {
        row[k] = s.values.back();
      } else {
        const auto j = static_cast<std::size_t>(hi - ts.begin());
        const double t0 = ts[j - 1], t1 = ts[j];
        if (t0 == t) {
          row[k] = s.values[j - 1];
        } else {
          const double a = (t - t0) / (t1 - t0);
          row[k] = s.values[j - 1] + a * (s.values[j] - s.values[j - 1]);
        }
      }
    }
    panel.node_ids.push_back(s.node_id);
    panel.values.push_back(std::move(row));
  }
  return panel;
}

std::vector<ReadingSeries> to_series(const AlignedPanel& panel) {
  std::vector<ReadingSeries> out;
  for (std::size_t i = 0; i < panel.n_nodes(); ++i)
    out.push_back(ReadingSeries{panel.node_ids[i], panel.grid, panel.values[i]});
  return out;
}

AlignedPanel select_nodes(const AlignedPanel& panel, std::span<const int> node_ids) {
  AlignedPanel out;
  out.grid = panel.grid;
  for (int id : node_ids) {
    out.node_ids.push_back(id);
    out.values.push_back(panel.values[panel.index_of(id)]);
  }
  return out;
}

FaultClass window_label(std::span<const FaultClass> samples) {
  for (FaultClass c : samples)
    if (c != FaultClass::Normal) return c;
  return FaultClass::Normal;
}

std::vector<LabeledWindow> make_windows(const AlignedPanel& panel, std::size_t w, std::size_t stride,
                                        const FaultMask& mask) {
  const std::size_t T = panel.n_samples();
  if (w == 0 || w > T) throw ConfigError("make_windows: window length must be in [1, T]");
  if (stride == 0) throw ConfigError("make_windows: stride must be >= 1");
  if (mask.rows.size() != panel.n_nodes()) throw ShapeError("make_windows: mask rows differ from panel rows");
  std::vector<LabeledWindow> out;
  for (std::size_t i = 0; i < panel.n_nodes(); ++i) {
    if (mask.rows[i].size() != T) throw ShapeError("make_windows: mask row length differs from grid");
    for (std::size_t s = 0; s + w <= T; s += stride) {
      LabeledWindow win;
      win.node_id = panel.node_ids[i];
      win.node_index = i;
      win.start_index = s;
      win.values.assign(panel.values[i].begin() + static_cast<std::ptrdiff_t>(s),
                        panel.values[i].begin() + static_cast<std::ptrdiff_t>(s + w));
      win.label = window_label(std::span(mask.rows[i]).subspan(s, w));
      out.push_back(std::move(win));
    }
  }
  return out;
}

Split BlockSplit::block_split(std::size_t sample_index) const {
  if (test_every == 0 || block_len == 0) return Split::Train;
  const std::size_t block = sample_index / block_len;
  return (block + 1) % test_every == 0 ? Split::Test : Split::Train;
}

Split BlockSplit::window_split(std::size_t start, std::size_t w) const {
  const Split first = block_split(start);
  if (block_len == 0 || w == 0) return first;
  for (std::size_t i = (start / block_len + 1) * block_len; i < start + w; i += block_len)
    if (block_split(i) != first) return Split::Discard;
  return first;
}

Normalizer Normalizer::fit(const AlignedPanel& panel, const BlockSplit& split) {
  Normalizer norm;
  norm.node_ids = panel.node_ids;
  for (const auto& row : panel.values) {
    double sum = 0, sq = 0;
    std::size_t n = 0;
    for (std::size_t k = 0; k < row.size(); ++k) {
      if (split.block_split(k) != Split::Train) continue;
      sum += row[k];
      ++n;
    }
    if (n == 0) throw InputError("normalizer: no training samples");
    const double mean = sum / static_cast<double>(n);
    for (std::size_t k = 0; k < row.size(); ++k)
      if (split.block_split(k) == Split::Train) sq += (row[k] - mean) * (row[k] - mean);
    double sd = std::sqrt(sq / static_cast<double>(n));
    if (!(sd > 1e-12)) sd = 1.0;
    norm.mean.push_back(mean);
    norm.stddev.push_back(sd);
  }
  return norm;
}

std::vector<double> Normalizer::apply(std::size_t node_index, std::span<const double> values) const {
  std::vector<double> out(values.size());
  for (std::size_t k = 0; k < values.size(); ++k) out[k] = apply(node_index, values[k]);
  return out;
}

}  // namespace hifinet
