#include "hifinet/energy.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <ostream>
#include <thread>

#include "hifinet/error.hpp"

namespace hifinet {

void EnergyParams::validate() const {
  for (double v : {eps_elec, eps_fs, eps_da, eps_mp, coap_overhead_bytes, value_bytes})
    if (!(v > 0) || !std::isfinite(v)) throw ConfigError("energy parameters must be strictly positive");
}

double link_energy(double l_bits, double d_m, const EnergyParams& p) {
  if (!(d_m >= 0)) throw DomainError("link_energy: negative distance");
  if (!(l_bits > 0)) throw DomainError("link_energy: bit count must be positive");
  return l_bits * (p.eps_elec + p.eps_da + p.eps_fs * d_m * d_m);
}

double payload_bits(std::size_t w_samples, const EnergyParams& p) {
  return (static_cast<double>(w_samples) * p.value_bytes + p.coap_overhead_bytes) * 8.0;
}

std::vector<int> shortest_path(const Topology& topo, int src, int dst, const EnergyParams& params) {
  const std::size_t n = topo.size();
  const std::size_t s = topo.index_of(src), d = topo.index_of(dst);
  const double inf = std::numeric_limits<double>::infinity();
  std::vector<double> cost(n, inf);
  std::vector<std::vector<int>> path(n);
  std::vector<bool> done(n, false);
  cost[s] = 0;
  path[s] = {src};
  // N is small, so the O(N^2) scan keeps the tie-break logic obvious.
  for (;;) {
    std::size_t u = n;
    for (std::size_t i = 0; i < n; ++i) {
      if (done[i] || cost[i] == inf) continue;
      if (u == n || cost[i] < cost[u] || (cost[i] == cost[u] && path[i] < path[u])) u = i;
    }
    if (u == n || u == d) break;
    done[u] = true;
    for (std::size_t v : topo.neighbors(u)) {
      if (done[v]) continue;
      const double c = cost[u] + link_energy(1, topo.distance(u, v), params);
      std::vector<int> cand = path[u];
      cand.push_back(topo.node_ids()[v]);
      if (c < cost[v] || (c == cost[v] && cand < path[v])) {
        cost[v] = c;
        path[v] = std::move(cand);
      }
    }
  }
  if (cost[d] == inf)
    throw RoutingError("no route from node " + std::to_string(src) + " to node " + std::to_string(dst));
  return path[d];
}

void EnergyLedger::add(const Transmission& t) {
  records_.push_back(t);
  // Neumaier summation
  const double next = sum_ + t.joules;
  if (std::abs(sum_) >= std::abs(t.joules))
    compensation_ += (sum_ - next) + t.joules;
  else
    compensation_ += (t.joules - next) + sum_;
  sum_ = next;
}

std::size_t aggregation_rounds(std::size_t n_windows, std::size_t t) {
  return n_windows == 0 ? 0 : (n_windows - 1) / (t + 1) + 1;
}

ScheduleEnergy schedule_energy(const Topology& topo, std::size_t n_windows, std::size_t t, std::size_t w_samples,
                               const EnergyParams& params) {
  params.validate();
  const double bits = payload_bits(w_samples, params);
  std::vector<Transmission> round;
  for (int member : topo.node_ids()) {
    if (member == topo.cluster_head()) continue;
    const auto route = shortest_path(topo, member, topo.cluster_head(), params);
    for (std::size_t h = 0; h + 1 < route.size(); ++h) {
      const double dist = topo.distance(topo.index_of(route[h]), topo.index_of(route[h + 1]));
      round.push_back({route[h], route[h + 1], bits, link_energy(bits, dist, params)});
    }
  }
  ScheduleEnergy out;
  out.rounds = aggregation_rounds(n_windows, t);
  for (const auto& r : round) out.round_energy += r.joules;
  for (std::size_t k = 0; k < out.rounds; ++k)
    for (const auto& r : round) out.ledger.add(r);
  return out;
}

TradeoffRow tradeoff_row(std::span<const WindowPredictions> windows, const Topology& topo, std::size_t t,
                         std::size_t w_samples, const EnergyParams& params) {
  TradeoffRow row;
  row.t = t;
  const auto energy = schedule_energy(topo, windows.size(), t, w_samples, params);
  row.rounds = energy.rounds;
  row.e_total_j = energy.total();
  row.ee = row.e_total_j > 0 ? 1.0 / row.e_total_j : std::numeric_limits<double>::infinity();
  std::size_t edge_ok = 0, comb_ok = 0, total = 0, network_windows = 0;
  for (std::size_t k = 0; k < windows.size(); ++k) {
    const auto& w = windows[k];
    if (w.edge.size() != w.truth.size() || w.network.size() != w.truth.size())
      throw ShapeError("tradeoff: prediction vectors differ in length");
    const bool round = is_round_window(k, t);
    network_windows += round;
    for (std::size_t i = 0; i < w.truth.size(); ++i) {
      edge_ok += w.edge[i] == w.truth[i];
      comb_ok += (round ? w.network[i] : w.edge[i]) == w.truth[i];
    }
    total += w.truth.size();
  }
  if (total == 0) throw InputError("tradeoff: no windows to evaluate");
  row.acc_edge = static_cast<double>(edge_ok) / static_cast<double>(total);
  row.acc_combined = static_cast<double>(comb_ok) / static_cast<double>(total);
  row.accuracy_delta_pct = 100.0 * (row.acc_combined - row.acc_edge);
  row.network_fraction = static_cast<double>(network_windows) / static_cast<double>(windows.size());
  return row;
}

std::vector<TradeoffRow> tradeoff_study(std::span<const WindowPredictions> windows, const Topology& topo,
                                        std::span<const std::size_t> t_values, std::size_t w_samples,
                                        const EnergyParams& params, std::size_t workers) {
  std::vector<TradeoffRow> rows(t_values.size());
  workers = std::clamp<std::size_t>(workers, 1, std::max<std::size_t>(t_values.size(), 1));
  if (workers == 1) {
    for (std::size_t k = 0; k < t_values.size(); ++k) rows[k] = tradeoff_row(windows, topo, t_values[k], w_samples, params);
    return rows;
  }
  // Static striping: each slot is written by exactly one thread, so order is fixed.
  std::vector<std::exception_ptr> errors(workers);
  std::vector<std::jthread> pool;
  for (std::size_t id = 0; id < workers; ++id)
    pool.emplace_back([&, id] {
      try {
        for (std::size_t k = id; k < t_values.size(); k += workers)
          rows[k] = tradeoff_row(windows, topo, t_values[k], w_samples, params);
      } catch (...) {
        errors[id] = std::current_exception();
      }
    });
  pool.clear();
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
  return rows;
}

void write_tradeoff_csv(std::ostream& out, std::span<const TradeoffRow> rows) {
  out << "t,rounds,E_total_J,EE,acc_edge,acc_combined,accuracy_delta_pct\n";
  char buf[512];
  for (const auto& r : rows) {
    std::snprintf(buf, sizeof buf, "%zu,%zu,%.17g,%.17g,%.17g,%.17g,%.17g\n", r.t, r.rounds, r.e_total_j, r.ee,
                  r.acc_edge, r.acc_combined, r.accuracy_delta_pct);
    out << buf;
  }
}

}  // namespace hifinet
