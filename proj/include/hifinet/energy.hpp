#pragma once

#include <cstddef>
#include <exception>
#include <iosfwd>
#include <span>
#include <vector>

#include "hifinet/fault.hpp"
#include "hifinet/topology.hpp"

namespace hifinet {

/// First-order radio model constants (SI units).
struct EnergyParams {
  double eps_elec = 50e-9;     // J/bit
  double eps_fs = 10e-12;      // J/bit/m^2
  double eps_da = 5e-9;        // J/bit
  double eps_mp = 0.0013e-12;  // J/bit/m^4, kept for completeness; the cost formula has no multipath term
  double coap_overhead_bytes = 32;
  double value_bytes = 4;

  void validate() const;  // throws ConfigError unless every field is > 0
};

/// E = l * (eps_elec + eps_da + eps_fs * d^2).
double link_energy(double l_bits, double d_m, const EnergyParams& params = {});

/// (w * value_bytes + overhead) * 8.
double payload_bits(std::size_t w_samples, const EnergyParams& params = {});

/// Minimum-energy route (edge cost = link_energy(1, d)) as node ids, ties
/// broken by the lexicographically smaller id sequence.
std::vector<int> shortest_path(const Topology& topology, int src, int dst, const EnergyParams& params = {});

struct Transmission {
  int src = 0;
  int dst = 0;
  double bits = 0;
  double joules = 0;
};

class EnergyLedger {
 public:
  void add(const Transmission& t);
  const std::vector<Transmission>& records() const { return records_; }
  double total() const { return sum_ + compensation_; }

 private:
  std::vector<Transmission> records_;
  double sum_ = 0;
  double compensation_ = 0;
};

struct ScheduleEnergy {
  std::size_t rounds = 0;
  double round_energy = 0;  // sum of hop energies of one round
  EnergyLedger ledger;      // every hop of every round
  double total() const { return static_cast<double>(rounds) * round_energy; }
  double efficiency() const { return 1.0 / total(); }
};

/// Number of aggregation rounds: windows 0, t+1, 2(t+1), ... below n_windows.
std::size_t aggregation_rounds(std::size_t n_windows, std::size_t t);
inline bool is_round_window(std::size_t window, std::size_t t) { return window % (t + 1) == 0; }

/// Each round, every member forwards a w-sample payload hop by hop to the
/// cluster head.
ScheduleEnergy schedule_energy(const Topology& topology, std::size_t n_windows, std::size_t t,
                               std::size_t w_samples, const EnergyParams& params = {});

/// Predictions for one time window, one entry per node.
struct WindowPredictions {
  std::vector<FaultClass> truth;
  std::vector<FaultClass> edge;
  std::vector<FaultClass> network;
};

struct TradeoffRow {
  std::size_t t = 0;
  std::size_t rounds = 0;
  double e_total_j = 0;
  double ee = 0;
  double acc_edge = 0;
  double acc_combined = 0;
  double accuracy_delta_pct = 0;
  double network_fraction = 0;  // share of windows served by network predictions
};

/// One row per t: network predictions at round windows, edge-only elsewhere.
/// `windows` must be in time order.
TradeoffRow tradeoff_row(std::span<const WindowPredictions> windows, const Topology& topology, std::size_t t,
                         std::size_t w_samples, const EnergyParams& params = {});

/// Rows in the order of `t_values`; up to `workers` threads.
std::vector<TradeoffRow> tradeoff_study(std::span<const WindowPredictions> windows, const Topology& topology,
                                        std::span<const std::size_t> t_values, std::size_t w_samples,
                                        const EnergyParams& params = {}, std::size_t workers = 1);

void write_tradeoff_csv(std::ostream& out, std::span<const TradeoffRow> rows);

}  // namespace hifinet
