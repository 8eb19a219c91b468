#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "hifinet/fault.hpp"
#include "hifinet/ingest.hpp"

namespace hifinet {

/// Half-open sample range [start, start + length).
struct Episode {
  std::size_t start = 0;
  std::size_t length = 0;

  std::size_t end() const { return start + length; }
  friend bool operator==(const Episode&, const Episode&) = default;
};

enum class StuckMode : std::uint8_t { NearestNormal, RandomInRange };

std::string stuck_mode_name(StuckMode mode);
StuckMode parse_stuck_mode(const std::string& name);  // throws ConfigError

// Single-fault primitives. Each returns a copy of `values` where only the
// samples inside the declared episodes/indices differ.

/// S(t) + b over every episode.
std::vector<double> inject_hardover(std::span<const double> values, std::span<const Episode> episodes,
                                    double b);

/// The n-th sample of the episode (n = 1..length) gains n * b0.
std::vector<double> inject_drift(std::span<const double> values, std::size_t start, std::size_t length,
                                 double b0);

/// S(t_s) + b_spike at each index. Indices must be isolated (no two adjacent).
std::vector<double> inject_spike(std::span<const double> values, std::span<const std::size_t> indices,
                                 double b_spike);

/// Adds N(0, (sigma_factor * clean_sigma)^2) inside the episodes.
std::vector<double> inject_erratic(std::span<const double> values, std::span<const Episode> episodes,
                                   double sigma_factor, double clean_sigma, std::uint64_t seed);

/// Freezes the episode at one constant: the last sample before onset
/// (NearestNormal; first sample after the episode when it starts at 0) or a
/// seeded uniform draw in [min, max] of `values` (RandomInRange).
std::vector<double> inject_stuck(std::span<const double> values, std::size_t start, std::size_t length,
                                 StuckMode mode, std::uint64_t seed);

/// Noise level of a clean series: std of second differences over sqrt(6).
double estimate_noise_sigma(std::span<const double> clean);

// ---------------------------------------------------------------------------

struct FaultParams {
  double b_hardover = 5.0;
  bool hardover_range = false;  // draw b per episode from [hardover_min, hardover_max]
  double hardover_min = 5.0;
  double hardover_max = 10.0;
  double b_drift = 0.3;
  double b_spike = 3.0;
  double erratic_sigma_factor = 2.0;
  bool erratic_factor_is_variance = false;  // treat the factor as a variance ratio
  StuckMode stuck_mode = StuckMode::NearestNormal;
  std::size_t persistent_episode_len = 48;  // hardover, drift, stuck-at
  std::size_t erratic_episode_len = 24;
};

struct InjectionPlan {
  std::map<int, FaultClass> node_to_fault;  // absent nodes stay Normal
  double fault_rate = 0.0;                  // fraction of all panel samples
  FaultParams params;
  std::uint64_t seed = 0;

  void validate() const;
};

/// First five node ids (ascending) get Hardover, Drift, Spike, Erratic, StuckAt;
/// the rest stay clean. Episode lengths default to 2w and w.
InjectionPlan default_plan(std::span<const int> node_ids, double fault_rate, std::size_t w,
                           std::uint64_t seed);

struct EpisodeRecord {
  int node_id = 0;
  FaultClass type = FaultClass::Normal;
  Episode episode;
  double parameter = 0.0;  // b, b0, b_spike, noise std or stuck constant
};

struct InjectedDataset {
  AlignedPanel panel;
  FaultMask mask;
  std::vector<EpisodeRecord> episodes;
};

/// Splits round(rate * N * T) faulty samples equally over the five fault types
/// and places each type's share as non-overlapping episodes on its node(s).
InjectedDataset build_dataset(const AlignedPanel& clean, const InjectionPlan& plan);

/// Per-type sample budget for a given total, remainder going to the earlier
/// types in Hardover..StuckAt order.
std::map<FaultClass, std::size_t> split_budget(std::size_t total);

}  // namespace hifinet
