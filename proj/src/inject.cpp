#include "hifinet/inject.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "hifinet/error.hpp"
#include "hifinet/rng.hpp"

namespace hifinet {

namespace {

void check_episodes(std::span<const Episode> episodes, std::size_t n) {
  std::vector<Episode> sorted(episodes.begin(), episodes.end());
  std::sort(sorted.begin(), sorted.end(),
            [](const Episode& a, const Episode& b) { return a.start < b.start; });
  for (std::size_t i = 0; i < sorted.size(); ++i) {
    if (sorted[i].length == 0) throw PlanError("episode of zero length");
    if (sorted[i].end() > n) throw PlanError("episode out of bounds");
    if (i > 0 && sorted[i].start < sorted[i - 1].end()) throw PlanError("overlapping episodes");
  }
}

constexpr std::uint64_t kErraticStream = 0xe77a71cULL;
constexpr std::uint64_t kStuckStream = 0x57cc0ULL;

}  // namespace

std::string stuck_mode_name(StuckMode mode) {
  return mode == StuckMode::NearestNormal ? "nearest_normal" : "random_in_range";
}

StuckMode parse_stuck_mode(const std::string& name) {
  if (name == "nearest_normal") return StuckMode::NearestNormal;
  if (name == "random_in_range") return StuckMode::RandomInRange;
  throw ConfigError("unknown stuck mode \"" + name + "\"");
}

std::vector<double> inject_hardover(std::span<const double> values, std::span<const Episode> episodes,
                                    double b) {
  if (!(b >= 0) || !std::isfinite(b)) throw PlanError("hardover bias must be finite and non-negative");
  check_episodes(episodes, values.size());
  std::vector<double> out(values.begin(), values.end());
  for (const Episode& e : episodes)
    for (std::size_t k = e.start; k < e.end(); ++k) out[k] += b;
  return out;
}

std::vector<double> inject_drift(std::span<const double> values, std::size_t start, std::size_t length,
                                 double b0) {
  if (b0 == 0 || !std::isfinite(b0)) throw PlanError("drift rate must be finite and non-zero");
  const Episode e{start, length};
  check_episodes(std::span(&e, 1), values.size());
  std::vector<double> out(values.begin(), values.end());
  for (std::size_t n = 1; n <= length; ++n) out[start + n - 1] += static_cast<double>(n) * b0;
  return out;
}

std::vector<double> inject_spike(std::span<const double> values, std::span<const std::size_t> indices,
                                 double b_spike) {
  std::vector<std::size_t> sorted(indices.begin(), indices.end());
  std::sort(sorted.begin(), sorted.end());
  for (std::size_t i = 0; i < sorted.size(); ++i) {
    if (sorted[i] >= values.size()) throw PlanError("spike index out of bounds");
    if (i > 0 && sorted[i] - sorted[i - 1] < 2) throw PlanError("spike indices must be isolated");
  }
  std::vector<double> out(values.begin(), values.end());
  for (std::size_t idx : sorted) out[idx] += b_spike;
  return out;
}

std::vector<double> inject_erratic(std::span<const double> values, std::span<const Episode> episodes,
                                   double sigma_factor, double clean_sigma, std::uint64_t seed) {
  if (!(sigma_factor > 1)) throw PlanError("erratic sigma factor must exceed 1");
  if (!(clean_sigma >= 0) || !std::isfinite(clean_sigma)) throw PlanError("clean sigma must be finite");
  check_episodes(episodes, values.size());
  std::vector<double> out(values.begin(), values.end());
  Rng rng(seed);
  const double sigma = sigma_factor * clean_sigma;
  for (const Episode& e : episodes)
    for (std::size_t k = e.start; k < e.end(); ++k) out[k] += sigma * rng.normal();
  return out;
}

std::vector<double> inject_stuck(std::span<const double> values, std::size_t start, std::size_t length,
                                 StuckMode mode, std::uint64_t seed) {
  const Episode e{start, length};
  check_episodes(std::span(&e, 1), values.size());
  double c = 0;
  if (mode == StuckMode::NearestNormal) {
    if (start > 0) {
      c = values[start - 1];
    } else if (e.end() < values.size()) {
      c = values[e.end()];
    } else {
      throw PlanError("stuck-at episode covers the whole series; no clean value to hold");
    }
  } else {
    const auto [lo, hi] = std::minmax_element(values.begin(), values.end());
    Rng rng(seed);
    c = rng.uniform(*lo, *hi);
  }
  std::vector<double> out(values.begin(), values.end());
  std::fill(out.begin() + static_cast<std::ptrdiff_t>(start),
            out.begin() + static_cast<std::ptrdiff_t>(e.end()), c);
  return out;
}

double estimate_noise_sigma(std::span<const double> clean) {
  if (clean.size() < 3) return 0.0;
  const std::size_t n = clean.size() - 2;
  double mean = 0;
  for (std::size_t k = 0; k < n; ++k) mean += clean[k + 2] - 2 * clean[k + 1] + clean[k];
  mean /= static_cast<double>(n);
  double sq = 0;
  for (std::size_t k = 0; k < n; ++k) {
    const double d = clean[k + 2] - 2 * clean[k + 1] + clean[k] - mean;
    sq += d * d;
  }
  return std::sqrt(sq / static_cast<double>(n) / 6.0);
}

void InjectionPlan::validate() const {
  if (!(fault_rate >= 0 && fault_rate < 1)) throw ConfigError("fault rate must lie in [0, 1)");
  if (params.persistent_episode_len == 0 || params.erratic_episode_len == 0)
    throw ConfigError("episode lengths must be positive");
  if (params.hardover_range && !(params.hardover_max >= params.hardover_min && params.hardover_min >= 0))
    throw ConfigError("hardover range must satisfy 0 <= min <= max");
}

InjectionPlan default_plan(std::span<const int> node_ids, double fault_rate, std::size_t w,
                           std::uint64_t seed) {
  std::vector<int> ids(node_ids.begin(), node_ids.end());
  std::sort(ids.begin(), ids.end());
  InjectionPlan plan;
  plan.fault_rate = fault_rate;
  plan.seed = seed;
  plan.params.persistent_episode_len = 2 * w;
  plan.params.erratic_episode_len = w;
  for (std::size_t i = 0; i < ids.size(); ++i)
    plan.node_to_fault[ids[i]] = i < kFaultTypes.size() ? kFaultTypes[i] : FaultClass::Normal;
  return plan;
}

std::map<FaultClass, std::size_t> split_budget(std::size_t total) {
  std::map<FaultClass, std::size_t> out;
  const std::size_t base = total / kFaultTypes.size();
  const std::size_t rem = total % kFaultTypes.size();
  for (std::size_t i = 0; i < kFaultTypes.size(); ++i) out[kFaultTypes[i]] = base + (i < rem ? 1 : 0);
  return out;
}

namespace {

// Non-overlapping episodes with at least one clean sample between neighbours,
// laid out by distributing the slack uniformly over the gaps.
std::vector<Episode> place_episodes(std::vector<std::size_t> lengths, std::size_t n_samples, Rng& rng) {
  if (lengths.empty()) return {};
  std::size_t used = lengths.size() - 1;
  for (std::size_t len : lengths) used += len;
  if (used > n_samples) throw PlanError("plan demands more faulty samples than the node provides");
  const std::size_t slack = n_samples - used;
  rng.shuffle(std::span(lengths));
  std::vector<std::size_t> cuts(lengths.size());
  for (auto& c : cuts) c = rng.below(slack + 1);
  std::sort(cuts.begin(), cuts.end());
  std::vector<Episode> out;
  std::size_t offset = 0;
  for (std::size_t i = 0; i < lengths.size(); ++i) {
    out.push_back(Episode{cuts[i] + offset, lengths[i]});
    offset += lengths[i] + 1;
  }
  return out;
}

std::vector<std::size_t> place_spikes(std::size_t count, std::size_t n_samples, Rng& rng) {
  if (count == 0) return {};
  if (2 * count > n_samples + 1) throw PlanError("plan demands more isolated spikes than the node provides");
  // Choose `count` distinct slots from n - count + 1, then spread them apart.
  const std::size_t slots = n_samples - count + 1;
  std::vector<std::size_t> pool(slots);
  for (std::size_t i = 0; i < slots; ++i) pool[i] = i;
  for (std::size_t i = 0; i < count; ++i) std::swap(pool[i], pool[i + rng.below(slots - i)]);
  std::vector<std::size_t> chosen(pool.begin(), pool.begin() + static_cast<std::ptrdiff_t>(count));
  std::sort(chosen.begin(), chosen.end());
  for (std::size_t i = 0; i < count; ++i) chosen[i] += i;
  return chosen;
}

std::vector<std::size_t> episode_lengths(std::size_t budget, std::size_t len) {
  std::vector<std::size_t> out(budget / len, len);
  if (budget % len) out.push_back(budget % len);
  return out;
}

}  // namespace

InjectedDataset build_dataset(const AlignedPanel& clean, const InjectionPlan& plan) {
  plan.validate();
  clean.validate();
  for (const auto& [id, type] : plan.node_to_fault) (void)clean.index_of(id);

  InjectedDataset out{clean, FaultMask::all_normal(clean.n_nodes(), clean.n_samples()), {}};
  const std::size_t T = clean.n_samples();
  const auto total = static_cast<std::size_t>(
      std::llround(plan.fault_rate * static_cast<double>(clean.n_nodes() * T)));
  if (total == 0) return out;

  const FaultParams& p = plan.params;
  for (const auto& [type, budget] : split_budget(total)) {
    if (budget == 0) continue;
    std::vector<int> nodes;
    for (const auto& [id, t] : plan.node_to_fault)
      if (t == type) nodes.push_back(id);
    if (nodes.empty())
      throw PlanError("no node is assigned fault type " + std::string(class_name(type)));

    for (std::size_t n = 0; n < nodes.size(); ++n) {
      const int id = nodes[n];
      const std::size_t share = budget / nodes.size() + (n < budget % nodes.size() ? 1 : 0);
      if (share == 0) continue;
      const std::size_t row = clean.index_of(id);
      const std::vector<double>& x = clean.values[row];
      std::vector<double>& y = out.panel.values[row];
      auto& mask = out.mask.rows[row];
      Rng rng(derive_seed(plan.seed, static_cast<std::uint64_t>(id)));

      auto mark = [&](const Episode& e, double param) {
        for (std::size_t k = e.start; k < e.end(); ++k) mask[k] = type;
        out.episodes.push_back(EpisodeRecord{id, type, e, param});
      };

      if (type == FaultClass::Spike) {
        const auto idx = place_spikes(share, T, rng);
        y = inject_spike(y, idx, p.b_spike);
        for (std::size_t i : idx) mark(Episode{i, 1}, p.b_spike);
        continue;
      }

      const std::size_t len =
          type == FaultClass::Erratic ? p.erratic_episode_len : p.persistent_episode_len;
      const auto episodes = place_episodes(episode_lengths(share, len), T, rng);
      switch (type) {
        case FaultClass::Hardover:
          for (const Episode& e : episodes) {
            const double b = p.hardover_range ? rng.uniform(p.hardover_min, p.hardover_max) : p.b_hardover;
            y = inject_hardover(y, std::span(&e, 1), b);
            mark(e, b);
          }
          break;
        case FaultClass::Drift:
          for (const Episode& e : episodes) {
            y = inject_drift(y, e.start, e.length, p.b_drift);
            mark(e, p.b_drift);
          }
          break;
        case FaultClass::Erratic: {
          const double factor =
              p.erratic_factor_is_variance ? std::sqrt(p.erratic_sigma_factor) : p.erratic_sigma_factor;
          const double sigma = estimate_noise_sigma(x);
          y = inject_erratic(y, episodes, factor, sigma,
                             derive_seed(plan.seed, kErraticStream + static_cast<std::uint64_t>(id)));
          for (const Episode& e : episodes) mark(e, factor * sigma);
          break;
        }
        case FaultClass::StuckAt: {
          // The constant comes from the clean row; episodes are separated by
          // clean samples, so the sample before onset is untouched.
          const std::uint64_t stream = derive_seed(plan.seed, kStuckStream + static_cast<std::uint64_t>(id));
          for (std::size_t i = 0; i < episodes.size(); ++i) {
            const Episode& e = episodes[i];
            const auto z = inject_stuck(x, e.start, e.length, p.stuck_mode, derive_seed(stream, i));
            std::copy(z.begin() + static_cast<std::ptrdiff_t>(e.start),
                      z.begin() + static_cast<std::ptrdiff_t>(e.end()),
                      y.begin() + static_cast<std::ptrdiff_t>(e.start));
            mark(e, z[e.start]);
          }
          break;
        }
        default:
          break;
      }
    }
  }
  std::sort(out.episodes.begin(), out.episodes.end(), [](const EpisodeRecord& a, const EpisodeRecord& b) {
    return a.node_id != b.node_id ? a.node_id < b.node_id : a.episode.start < b.episode.start;
  });
  return out;
}

}  // namespace hifinet
