#include "hifinet/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <set>
#include <thread>

#include "hifinet/error.hpp"
#include "hifinet/rng.hpp"

namespace hifinet {

namespace fs = std::filesystem;

namespace {
fs::path resolve(const fs::path& base, const std::string& p) { return base.empty() ? fs::path(p) : base / p; }

// Seed streams for the independent random consumers of one experiment.
enum Stream : std::uint64_t { kEdgeInit = 101, kEdgePretrain = 110, kEdgeTune = 120, kIgnInit = 201, kIgnTrain = 210 };
}  // namespace

AlignedPanel load_clean_panel(const ExperimentConfig& cfg, const fs::path& base) {
  const auto& d = cfg.data;
  std::vector<ReadingSeries> series;
  if (d.source == "synthetic") {
    series = generate_synthetic(d.synthetic);
  } else if (d.source == "intel") {
    IntelParseOptions opt;
    opt.min_valid = d.min_valid;
    opt.max_valid = d.max_valid;
    series = parse_intel(resolve(base, d.intel_path), opt).series;
  } else if (d.source == "csv") {
    for (const auto& [id, p] : d.csv_paths) series.push_back(parse_node_csv(resolve(base, p), id));
  } else {
    throw ConfigError("unknown data source '" + d.source + "'");
  }
  std::vector<int> keep = d.nodes;
  if (keep.empty() && d.source != "synthetic") {
    for (const auto& s : series) keep.push_back(s.node_id);
    std::sort(keep.begin(), keep.end());
    if (keep.size() > 6) keep.resize(6);
  }
  if (!keep.empty()) {
    std::vector<ReadingSeries> chosen;
    for (int id : keep) {
      auto it = std::find_if(series.begin(), series.end(), [&](const ReadingSeries& s) { return s.node_id == id; });
      if (it == series.end()) throw AlignmentError("node " + std::to_string(id) + " has no readings");
      chosen.push_back(*it);
    }
    series = std::move(chosen);
  }
  return align(series, d.grid_interval_s, d.time_range);
}

Topology make_topology(const ExperimentConfig& cfg, std::span<const int> node_ids, const fs::path& base) {
  Topology t = cfg.topology.path.empty() ? Topology::grid(node_ids, cfg.topology.spacing, cfg.topology.radius)
                                         : Topology::load(resolve(base, cfg.topology.path));
  t.validate();
  std::set<int> a(node_ids.begin(), node_ids.end()), b(t.node_ids().begin(), t.node_ids().end());
  if (a != b) throw ConfigError("topology nodes do not match the selected panel nodes");
  return t;
}

nn::Tensor mask_for(const Topology& topo, std::span<const int> node_ids, bool self_loops) {
  const auto full = topo.attention_mask(self_loops);
  nn::Tensor m(node_ids.size(), node_ids.size());
  for (std::size_t i = 0; i < node_ids.size(); ++i)
    for (std::size_t j = 0; j < node_ids.size(); ++j) m(i, j) = full(topo.index_of(node_ids[i]), topo.index_of(node_ids[j]));
  return m;
}

std::size_t worker_count() {
  if (const char* env = std::getenv("HIFINET_WORKERS")) {
    char* end = nullptr;
    const long v = std::strtol(env, &end, 10);
    if (end != env && *end == '\0' && v >= 1) return static_cast<std::size_t>(v);
    throw ConfigError("HIFINET_WORKERS must be a positive integer");
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

InjectionPlan make_plan(const ExperimentConfig& cfg, std::span<const int> node_ids, double rate) {
  InjectionPlan plan = default_plan(node_ids, rate, cfg.window.w, cfg.injection.seed);
  if (!cfg.injection.node_to_fault.empty()) plan.node_to_fault = cfg.injection.node_to_fault;
  plan.params = cfg.injection.params;
  plan.validate();
  return plan;
}

BlockSplit block_split(const ExperimentConfig& cfg) { return BlockSplit{cfg.window.block_len, cfg.window.test_every}; }

WindowIndex index_windows(const ExperimentConfig& cfg, std::size_t n_samples) {
  const std::size_t w = cfg.window.w;
  if (w > n_samples) throw ConfigError("window length exceeds the panel length");
  const auto split = block_split(cfg);
  const std::size_t he = cfg.window.holdout_every;
  const std::size_t bl = split.block_len;
  // ordinal among training blocks
  auto held = [&](std::size_t sample) {
    const std::size_t b = sample / bl;
    return he != 0 && (b - b / split.test_every) % he == he - 1;
  };
  WindowIndex idx;
  for (std::size_t s = 0; s + w <= n_samples; ++s) {
    const Split k = split.window_split(s, w);
    if (k == Split::Train && s % cfg.window.stride == 0) {
      const bool h = held(s);
      if (h != held(s + w - 1)) continue;
      (h ? idx.holdout : idx.train).push_back(s);
    }
    if (k == Split::Test && s % cfg.window.eval_stride == 0) idx.test.push_back(s);
    if (k == Split::Test && s % cfg.tradeoff_stride() == 0) idx.tradeoff.push_back(s);
  }
  if (idx.train.empty() || idx.test.empty() || (he != 0 && idx.holdout.empty()))
    throw DataError("panel too short for a train/test split of the windows");
  return idx;
}

FeatureSpec FeatureSpec::fit(const AlignedPanel& panel, const BlockSplit& split, const std::string& mode,
                             std::size_t w) {
  FeatureSpec f;
  f.mode = mode;
  f.w = w;
  f.norm = Normalizer::fit(panel, split);
  f.diff_scale.assign(panel.n_nodes(), 1.0);
  if (mode != "value") {
    for (std::size_t i = 0; i < panel.n_nodes(); ++i) {
      double s = 0, s2 = 0;
      std::size_t n = 0;
      for (std::size_t t = 1; t < panel.n_samples(); ++t) {
        if (split.block_split(t) != Split::Train || split.block_split(t - 1) != Split::Train) continue;
        const double d = f.norm.apply(i, panel.values[i][t]) - f.norm.apply(i, panel.values[i][t - 1]);
        s += d;
        s2 += d * d;
        ++n;
      }
      if (n > 1) {
        const double var = (s2 - s * s / static_cast<double>(n)) / static_cast<double>(n - 1);
        if (var > 0) f.diff_scale[i] = std::sqrt(var);
      }
    }
  }
  return f;
}

SequenceBatch FeatureSpec::batch(const AlignedPanel& panel,
                                 std::span<const std::pair<std::size_t, std::size_t>> items) const {
  SequenceBatch b;
  b.steps.assign(w, nn::Tensor(items.size(), dim()));
  for (std::size_t r = 0; r < items.size(); ++r) {
    const auto [node, start] = items[r];
    if (start + w > panel.n_samples()) throw ShapeError("feature window runs past the panel end");
    const auto& row = panel.values[node];
    double prev = norm.apply(node, row[start]);
    for (std::size_t t = 0; t < w; ++t) {
      const double v = norm.apply(node, row[start + t]);
      b.steps[t](r, 0) = v;
      if (dim() == 2) b.steps[t](r, 1) = (v - prev) / diff_scale[node];
      prev = v;
    }
  }
  return b;
}

nlohmann::json FeatureSpec::to_json() const {
  return {{"mode", mode},
          {"w", w},
          {"node_ids", norm.node_ids},
          {"mean", norm.mean},
          {"stddev", norm.stddev},
          {"diff_scale", diff_scale}};
}

FeatureSpec FeatureSpec::from_json(const nlohmann::json& j) {
  FeatureSpec f;
  try {
    f.mode = j.at("mode").get<std::string>();
    f.w = j.at("w").get<std::size_t>();
    f.norm.node_ids = j.at("node_ids").get<std::vector<int>>();
    f.norm.mean = j.at("mean").get<std::vector<double>>();
    f.norm.stddev = j.at("stddev").get<std::vector<double>>();
    f.diff_scale = j.at("diff_scale").get<std::vector<double>>();
  } catch (const nlohmann::json::exception& e) {
    throw InputError(std::string("feature metadata: ") + e.what());
  }
  return f;
}

namespace {

std::vector<std::pair<std::size_t, std::size_t>> items_for(std::size_t n_nodes, std::span<const std::size_t> starts) {
  std::vector<std::pair<std::size_t, std::size_t>> items;
  items.reserve(n_nodes * starts.size());
  for (std::size_t s : starts)
    for (std::size_t i = 0; i < n_nodes; ++i) items.emplace_back(i, s);
  return items;
}

FaultClass label_at(const InjectedDataset& ds, std::size_t node, std::size_t start, std::size_t w) {
  return window_label(std::span(ds.mask.rows[node]).subspan(start, w));
}

}  // namespace

std::vector<std::vector<std::size_t>> window_labels(const InjectedDataset& ds, std::size_t w,
                                                    std::span<const std::size_t> starts) {
  std::vector<std::vector<std::size_t>> out;
  out.reserve(starts.size());
  for (std::size_t s : starts) {
    std::vector<std::size_t> row;
    for (std::size_t i = 0; i < ds.panel.n_nodes(); ++i) row.push_back(class_index(label_at(ds, i, s, w)));
    out.push_back(std::move(row));
  }
  return out;
}

namespace {

// Pretrains and fine-tunes a fresh edge model on the windows at `starts`.
EdgeStage fit_edge(const ExperimentConfig& cfg, const InjectedDataset& ds, FeatureSpec features,
                   std::span<const std::size_t> starts, const LogSink& log) {
  EdgeStage st{EdgeModel::create({cfg.input_dim(), cfg.edge.hidden}, derive_seed(cfg.seed, kEdgeInit)),
               std::move(features),
               {}};
  const auto items = items_for(ds.panel.n_nodes(), starts);
  std::vector<FaultClass> labels;
  labels.reserve(items.size());
  for (const auto& [node, start] : items) labels.push_back(label_at(ds, node, start, cfg.window.w));
  const SequenceBatch x = st.features.batch(ds.panel, items);

  SequenceBatch pre = x;
  if (cfg.edge.pretrain_clean_only) {
    std::vector<std::size_t> clean;
    for (std::size_t k = 0; k < labels.size(); ++k)
      if (labels[k] == FaultClass::Normal) clean.push_back(k);
    pre = x.gather(clean);
  }
  for (std::size_t l = 1; l <= st.model.n_layers(); ++l) {
    TrainOptions opt;
    opt.epochs = cfg.edge.pretrain_epochs;
    opt.lr = cfg.edge.lr;
    opt.batch_size = cfg.edge.batch_size;
    opt.seed = derive_seed(cfg.seed, kEdgePretrain + l);
    opt.on_epoch = log;
    const SequenceBatch in = l == 1 ? pre : encode_frozen(st.model, pre, l - 1);
    pretrain_layer(st.model, l, in, opt);
  }
  FineTuneOptions ft;
  ft.epochs = cfg.edge.finetune_epochs;
  ft.lr = cfg.edge.lr;
  ft.batch_size = cfg.edge.batch_size;
  ft.seed = derive_seed(cfg.seed, kEdgeTune);
  ft.on_epoch = log;
  ft.patience = cfg.edge.patience;
  ft.val_fraction = cfg.edge.val_fraction;
  st.result = fine_tune(st.model, x, labels, ft);
  return st;
}

}  // namespace

EdgeStage train_edge_stage(const ExperimentConfig& cfg, const InjectedDataset& ds, const LogSink& log) {
  const auto idx = index_windows(cfg, ds.panel.n_samples());
  return fit_edge(cfg, ds, FeatureSpec::fit(ds.panel, block_split(cfg), cfg.window.features, cfg.window.w),
                  idx.train, log);
}

std::vector<std::vector<EdgeOutput>> edge_outputs(EdgeModel& model, const FeatureSpec& features,
                                                  const AlignedPanel& panel, std::span<const std::size_t> starts) {
  const std::size_t n = panel.n_nodes();
  auto flat = edge_forward(model, features.batch(panel, items_for(n, starts)));
  std::vector<std::vector<EdgeOutput>> out(starts.size());
  for (std::size_t k = 0; k < starts.size(); ++k)
    out[k].assign(std::make_move_iterator(flat.begin() + static_cast<std::ptrdiff_t>(k * n)),
                  std::make_move_iterator(flat.begin() + static_cast<std::ptrdiff_t>((k + 1) * n)));
  return out;
}

std::vector<GraphSample> graph_samples(const std::vector<std::vector<EdgeOutput>>& outputs,
                                       const std::vector<std::vector<std::size_t>>& labels,
                                       std::span<const std::size_t> groups) {
  std::vector<GraphSample> out;
  out.reserve(outputs.size());
  for (std::size_t k = 0; k < outputs.size(); ++k) {
    const auto& nodes = outputs[k];
    const std::size_t d = node_state(nodes.front()).size();
    nn::Tensor h(nodes.size(), d);
    for (std::size_t i = 0; i < nodes.size(); ++i) {
      const auto row = node_state(nodes[i]);
      std::copy(row.begin(), row.end(), h.row(i).begin());
    }
    out.push_back({std::move(h), labels.at(k), groups.empty() ? 0 : groups[k]});
  }
  return out;
}

IgnStage train_ign_stage(const ExperimentConfig& cfg, const InjectedDataset& ds, EdgeModel& edge,
                         const FeatureSpec& features, const Topology& topo, const LogSink& log) {
  const auto idx = index_windows(cfg, ds.panel.n_samples());
  // an internal validation split holds out whole blocks; overlapping windows would leak otherwise
  std::vector<std::size_t> blocks;
  for (std::size_t s : idx.train) blocks.push_back(s / cfg.window.block_len);
  const auto samples = graph_samples(edge_outputs(edge, features, ds.panel, idx.train),
                                     window_labels(ds, cfg.window.w, idx.train), blocks);
  std::vector<GraphSample> held;
  if (!idx.holdout.empty())
    held = graph_samples(edge_outputs(edge, features, ds.panel, idx.holdout),
                         window_labels(ds, cfg.window.w, idx.holdout));
  IgnConfig mc = cfg.ign.model;
  mc.input_dim = kNumClasses + edge.embedding_dim();
  IgnStage st{IgnModel::create(mc, derive_seed(cfg.seed, kIgnInit)), {}};
  IgnTrainOptions opt;
  opt.epochs = cfg.ign.epochs;
  opt.lr = cfg.ign.lr;
  opt.batch_size = cfg.ign.batch_size;
  opt.seed = derive_seed(cfg.seed, kIgnTrain);
  opt.on_epoch = log;
  opt.patience = cfg.ign.patience;
  opt.val_fraction = cfg.ign.val_fraction;
  opt.temp_loss_weight = cfg.ign.temp_loss_weight;
  opt.validation = held;
  st.result = train_ign(st.model, samples, mask_for(topo, ds.panel.node_ids, mc.self_loops), opt);
  return st;
}

std::vector<double> softmax_row(std::span<const double> logits) { return nn::softmax(logits); }

namespace {

struct GraphPredictions {
  std::vector<std::vector<double>> logits;      // per node window, start-major
  std::vector<std::vector<double>> embeddings;
};

GraphPredictions predict_graphs(IgnModel& ign, std::span<const GraphSample> samples, const nn::Tensor& mask) {
  GraphPredictions out;
  constexpr std::size_t kChunk = 64;
  for (std::size_t b = 0; b < samples.size(); b += kChunk) {
    std::vector<const GraphSample*> part;
    for (std::size_t k = b; k < std::min(samples.size(), b + kChunk); ++k) part.push_back(&samples[k]);
    auto [h, m] = stack_graphs(part, mask);
    nn::Tape tape;
    auto fwd = ign_forward(tape, ign, tape.constant(std::move(h)), m);
    const auto& z = fwd.logits.value();
    const auto& e = fwd.embedding.value();
    for (std::size_t r = 0; r < z.rows(); ++r) {
      out.logits.emplace_back(z.row(r).begin(), z.row(r).end());
      out.embeddings.emplace_back(e.row(r).begin(), e.row(r).end());
    }
  }
  return out;
}

}  // namespace

Evaluation evaluate_stage(const ExperimentConfig& cfg, const InjectedDataset& ds, EdgeModel& edge,
                          const FeatureSpec& features, IgnModel& ign, const Topology& topo, double rate) {
  const auto idx = index_windows(cfg, ds.panel.n_samples());
  const auto mask = mask_for(topo, ds.panel.node_ids, ign.config().self_loops);
  Evaluation ev;

  const auto outs = edge_outputs(edge, features, ds.panel, idx.test);
  const auto labels = window_labels(ds, cfg.window.w, idx.test);
  const auto samples = graph_samples(outs, labels);
  auto graph = predict_graphs(ign, samples, mask);
  std::vector<std::vector<double>> p_edge, p_net;
  for (std::size_t k = 0; k < outs.size(); ++k)
    for (std::size_t i = 0; i < outs[k].size(); ++i) {
      ev.labels.push_back(labels[k][i]);
      p_edge.push_back(softmax_row(outs[k][i].logits));
    }
  for (const auto& z : graph.logits) p_net.push_back(softmax_row(z));
  ev.embeddings = std::move(graph.embeddings);
  ReportMeta meta{cfg.data.source, rate, "edge", cfg.seed};
  ev.edge = make_report(ev.labels, p_edge, meta);
  meta.model = "hifinet";
  ev.hifinet = make_report(ev.labels, p_net, meta);

  const auto t_outs = edge_outputs(edge, features, ds.panel, idx.tradeoff);
  const auto t_labels = window_labels(ds, cfg.window.w, idx.tradeoff);
  const auto t_samples = graph_samples(t_outs, t_labels);
  const auto t_graph = predict_graphs(ign, t_samples, mask);
  const std::size_t n = ds.panel.n_nodes();
  for (std::size_t k = 0; k < t_outs.size(); ++k) {
    WindowPredictions wp;
    for (std::size_t i = 0; i < n; ++i) {
      wp.truth.push_back(class_from_index(t_labels[k][i]));
      wp.edge.push_back(class_from_index(argmax(t_outs[k][i].logits)));
      wp.network.push_back(class_from_index(argmax(t_graph.logits[k * n + i])));
    }
    ev.tradeoff_windows.push_back(std::move(wp));
  }
  return ev;
}

RateResult run_rate(const ExperimentConfig& cfg, const AlignedPanel& clean, const Topology& topo, double rate,
                    const LogSink& log) {
  RateResult r;
  r.rate = rate;
  const auto ds = build_dataset(clean, make_plan(cfg, clean.node_ids, rate));
  auto edge = train_edge_stage(cfg, ds, log);
  auto ign = train_ign_stage(cfg, ds, edge.model, edge.features, topo, log);
  r.eval = evaluate_stage(cfg, ds, edge.model, edge.features, ign.model, topo, rate);
  r.tradeoff = tradeoff_study(r.eval.tradeoff_windows, topo, cfg.energy.t_values, cfg.window.w, cfg.energy.params,
                              worker_count());
  return r;
}

}  // namespace hifinet
