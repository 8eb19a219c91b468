#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "hifinet/fault.hpp"

namespace hifinet {

/// Timestamped scalar readings from one node. Timestamps are seconds since the
/// Unix epoch and strictly increasing; values are finite.
struct ReadingSeries {
  int node_id = 0;
  std::vector<double> timestamps;
  std::vector<double> values;

  std::size_t size() const { return values.size(); }
  /// Throws IngestError when an invariant is broken.
  void validate() const;
};

/// Readings of N nodes resampled onto one shared time grid.
struct AlignedPanel {
  std::vector<int> node_ids;
  std::vector<double> grid;
  std::vector<std::vector<double>> values;  // N rows of grid.size() entries

  std::size_t n_nodes() const { return node_ids.size(); }
  std::size_t n_samples() const { return grid.size(); }
  std::size_t index_of(int node_id) const;  // throws InputError when absent
  void validate() const;
};

struct LabeledWindow {
  int node_id = 0;
  std::size_t node_index = 0;
  std::size_t start_index = 0;
  std::vector<double> values;
  FaultClass label = FaultClass::Normal;
};

// ---------------------------------------------------------------------------
// Parsing

struct IntelParseOptions {
  // Readings outside [min_valid, max_valid] are dropped like malformed lines.
  // The defaults keep everything finite.
  double min_valid = -std::numeric_limits<double>::infinity();
  double max_valid = std::numeric_limits<double>::infinity();
};

struct IntelParseResult {
  std::vector<ReadingSeries> series;  // sorted by node id
  std::size_t valid_count = 0;
  std::size_t dropped_count = 0;
};

/// Parses the Intel Berkeley Lab flat file (date time epoch moteid temperature
/// humidity light voltage). Only the temperature channel is kept.
IntelParseResult parse_intel(const std::filesystem::path& path,
                             const IntelParseOptions& options = {});
IntelParseResult parse_intel(std::istream& in, const IntelParseOptions& options = {});

/// Parses a "timestamp,value" CSV. Timestamps may be epoch seconds or ISO-8601.
ReadingSeries parse_node_csv(const std::filesystem::path& path, int node_id);
ReadingSeries parse_node_csv(std::istream& in, int node_id);

/// Seconds since the epoch from "YYYY-MM-DD[T ]HH:MM:SS[.fff][Z]" or a plain
/// number. Returns nullopt on malformed input.
std::optional<double> parse_timestamp(std::string_view text);

// ---------------------------------------------------------------------------
// Synthetic data

struct SyntheticParams {
  std::size_t n_nodes = 6;
  double n_days = 30;
  double sample_interval_s = 3600;
  double base_temp = 25.0;
  double daily_amplitude = 3.0;
  double noise_sigma = 0.3;
  double node_offset_sigma = 0.5;  // spread of the per-node constant offset
  double start_epoch = 0.0;
  std::uint64_t seed = 1;
};

/// base + per-node offset + 24 h sinusoid + N(0, noise_sigma^2). Node ids are
/// 1..n_nodes. Each node draws from its own stream derived from (seed, id).
std::vector<ReadingSeries> generate_synthetic(const SyntheticParams& params);

// ---------------------------------------------------------------------------
// Alignment and windowing

struct TimeRange {
  double start = 0.0;
  double end = 0.0;
};

/// Resamples every series onto start + k * grid_interval_s. Interior grid
/// points are linearly interpolated, points outside a node's readings take the
/// nearest reading. Without an explicit range the union of all series spans is
/// used. Throws AlignmentError naming a node with no readings in range.
AlignedPanel align(std::span<const ReadingSeries> series, double grid_interval_s,
                   std::optional<TimeRange> range = std::nullopt);

std::vector<ReadingSeries> to_series(const AlignedPanel& panel);

/// Keeps only the listed nodes, in the listed order.
AlignedPanel select_nodes(const AlignedPanel& panel, std::span<const int> node_ids);

/// Label of one window under the any-sample rule: the first non-Normal class
/// found, else Normal.
FaultClass window_label(std::span<const FaultClass> samples);

/// All windows of length w at starts 0, stride, 2*stride, ... for every node,
/// ordered by node then start.
std::vector<LabeledWindow> make_windows(const AlignedPanel& panel, std::size_t w,
                                        std::size_t stride, const FaultMask& mask);

// ---------------------------------------------------------------------------
// Splits and normalization

enum class Split : std::uint8_t { Train, Test, Discard };

/// The grid is cut into blocks of block_len samples; every test_every-th block
/// (1-based) is a test block. A window belongs to the split of the block its
/// start falls into and is discarded when it reaches into a block of the other
/// split.
struct BlockSplit {
  std::size_t block_len = 48;
  std::size_t test_every = 4;

  Split block_split(std::size_t sample_index) const;
  Split window_split(std::size_t start, std::size_t w) const;
};

/// Per-node z-score statistics.
struct Normalizer {
  std::vector<int> node_ids;
  std::vector<double> mean;
  std::vector<double> stddev;

  /// Statistics over the samples of each row whose block is a train block.
  static Normalizer fit(const AlignedPanel& panel, const BlockSplit& split);
  double apply(std::size_t node_index, double value) const {
    return (value - mean[node_index]) / stddev[node_index];
  }
  std::vector<double> apply(std::size_t node_index, std::span<const double> values) const;
};

}  // namespace hifinet
