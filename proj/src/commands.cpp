#include "hifinet/commands.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include "hifinet/error.hpp"
#include "hifinet/io.hpp"
#include "hifinet/report.hpp"

namespace hifinet {

namespace fs = std::filesystem;
using nlohmann::json;

Layout::Layout(const fs::path& wd, const ExperimentConfig& cfg) : workdir(wd), root(wd / cfg.output_dir) {}
fs::path Layout::dataset(double rate) const { return root / "datasets" / rate_tag(rate); }
fs::path Layout::models(double rate) const { return root / "models" / rate_tag(rate); }
fs::path Layout::reports(double rate) const { return root / "reports" / rate_tag(rate); }

json manifest(const ExperimentConfig& cfg, const std::string& command) {
  return {{"tool", "hifinet"},
          {"version", kToolkitVersion},
          {"command", command},
          {"config_hash", config_hash(cfg)},
          {"seed", cfg.seed}};
}

namespace {

void say(const CommandContext& ctx, const std::string& msg) {
  if (ctx.progress) ctx.progress(msg);
}

std::vector<double> rates_of(const CommandContext& ctx) {
  if (ctx.rate) return {*ctx.rate};
  return ctx.config.injection.rates;
}

// Appends epoch records to a JSONL file.
class JsonlLog {
 public:
  explicit JsonlLog(const fs::path& p) {
    fs::create_directories(p.parent_path());
    out_.open(p, std::ios::binary | std::ios::trunc);
    if (!out_) throw IngestError("cannot write " + p.string());
  }
  LogSink sink() {
    return [this](const EpochRecord& r) {
      json j{{"epoch", r.epoch}, {"split", r.split}, {"loss", r.loss}};
      j["accuracy"] = r.accuracy < 0 ? json(nullptr) : json(r.accuracy);
      out_ << j.dump() << '\n';
    };
  }

 private:
  std::ofstream out_;
};

std::string render(const std::function<void(std::ostream&)>& fn) {
  std::ostringstream ss;
  fn(ss);
  return ss.str();
}

InjectedDataset read_dataset(const Layout& lay, double rate) {
  const auto dir = lay.dataset(rate);
  if (!fs::exists(dir / "panel.csv"))
    throw DataError("dataset " + dir.string() + " is missing; run the inject command first");
  return load_dataset(dir);
}

Topology read_topology(const CommandContext& ctx, const Layout& lay, std::span<const int> ids) {
  if (fs::exists(lay.topology())) return Topology::load(lay.topology());
  return make_topology(ctx.config, ids, ctx.workdir);
}

void write_metrics_table(const CommandContext& ctx, const Layout& lay) {
  // Rebuilds the cross-rate table from whichever per-rate reports exist.
  std::vector<MetricsReport> reports;
  std::vector<std::pair<double, std::pair<double, double>>> f1s;  // rate -> (edge, hifinet)
  for (double rate : ctx.config.injection.rates) {
    const auto dir = lay.reports(rate);
    if (!fs::exists(dir / "metrics_edge.json") || !fs::exists(dir / "metrics_hifinet.json")) continue;
    std::pair<double, double> f;
    for (const char* model : {"edge", "hifinet"}) {
      const json j = read_json(dir / (std::string("metrics_") + model + ".json"));
      MetricsReport r;
      r.meta.dataset = j["meta"]["dataset"].get<std::string>();
      r.meta.fault_rate = j["meta"]["fault_rate"].get<double>();
      r.meta.model = model;
      r.accuracy = j["accuracy"].get<double>();
      r.weighted_precision = j["weighted_precision"].get<double>();
      r.weighted_recall = j["weighted_recall"].get<double>();
      r.weighted_f1 = j["weighted_f1"].get<double>();
      r.auprc = j["auprc"].get<double>();
      (std::string(model) == "edge" ? f.first : f.second) = r.weighted_f1;
      reports.push_back(std::move(r));
    }
    f1s.emplace_back(rate, f);
  }
  if (reports.empty()) return;
  write_text(lay.reports_root() / "metrics.csv", render([&](std::ostream& o) { write_metrics_table_csv(o, reports); }));
  if (f1s.size() >= 2) {
    auto lo = std::min_element(f1s.begin(), f1s.end());
    auto hi = std::max_element(f1s.begin(), f1s.end());
    std::ostringstream o;
    o << "model,low_rate,high_rate,f1_low,f1_high,f1_drop_points\n";
    o << "edge," << fmt_double(lo->first) << ',' << fmt_double(hi->first) << ',' << fmt_double(lo->second.first) << ','
      << fmt_double(hi->second.first) << ',' << fmt_double(f1_drop(lo->second.first, hi->second.first)) << '\n';
    o << "hifinet," << fmt_double(lo->first) << ',' << fmt_double(hi->first) << ',' << fmt_double(lo->second.second)
      << ',' << fmt_double(hi->second.second) << ',' << fmt_double(f1_drop(lo->second.second, hi->second.second))
      << '\n';
    write_text(lay.reports_root() / "f1_drop.csv", o.str());
  }
  write_json(lay.reports_root() / "manifest.json", manifest(ctx.config, "evaluate"));
}

}  // namespace

EdgeStage load_edge(const fs::path& dir) {
  if (!fs::exists(dir / "edge_meta.json")) throw DataError("no edge model in " + dir.string() + "; run train-edge first");
  const json meta = read_json(dir / "edge_meta.json");
  EdgeArchitecture arch;
  arch.input_dim = meta.at("input_dim").get<std::size_t>();
  arch.hidden = meta.at("hidden").get<std::vector<std::size_t>>();
  EdgeStage st{EdgeModel::create(arch, 0), FeatureSpec::from_json(meta.at("features")), {}};
  st.model.params().load(dir / "edge.ckpt");
  return st;
}

IgnModel load_ign(const fs::path& dir) {
  if (!fs::exists(dir / "ign_meta.json")) throw DataError("no graph model in " + dir.string() + "; run train-ign first");
  const json m = read_json(dir / "ign_meta.json");
  IgnConfig c;
  c.input_dim = m.at("input_dim").get<std::size_t>();
  c.gat_hidden = m.at("gat_hidden").get<std::size_t>();
  c.gat_layers = m.at("gat_layers").get<std::size_t>();
  c.iterations = m.at("iterations").get<std::size_t>();
  c.dropout = m.at("dropout").get<double>();
  c.shared_temp_classifier = m.at("shared_temp_classifier").get<bool>();
  c.self_loops = m.at("self_loops").get<bool>();
  c.passthrough_head = m.at("passthrough_head").get<bool>();
  IgnModel model = IgnModel::create(c, 0);
  model.params().load(dir / "ign.ckpt");
  return model;
}

void cmd_gen_synthetic(const CommandContext& ctx) {
  const auto& cfg = ctx.config;
  const Layout lay(ctx.workdir, cfg);
  const auto series = generate_synthetic(cfg.data.synthetic);
  for (const auto& s : series) {
    std::ostringstream o;
    o << "timestamp,value\n";
    for (std::size_t k = 0; k < s.size(); ++k) o << fmt_double(s.timestamps[k]) << ',' << fmt_double(s.values[k]) << '\n';
    write_text(lay.synthetic() / ("node_" + std::to_string(s.node_id) + ".csv"), o.str());
  }
  json m = manifest(cfg, "gen-synthetic");
  m["nodes"] = series.size();
  write_json(lay.synthetic() / "manifest.json", m);
  say(ctx, "wrote " + std::to_string(series.size()) + " synthetic series to " + lay.synthetic().string());
}

void cmd_inject(const CommandContext& ctx) {
  const auto& cfg = ctx.config;
  const Layout lay(ctx.workdir, cfg);
  const AlignedPanel clean = load_clean_panel(cfg, ctx.workdir);
  const Topology topo = make_topology(cfg, clean.node_ids, ctx.workdir);
  fs::create_directories(lay.root);
  topo.save(lay.topology());
  for (double rate : rates_of(ctx)) {
    const auto plan = make_plan(cfg, clean.node_ids, rate);
    const auto ds = build_dataset(clean, plan);
    const auto dir = lay.dataset(rate);
    save_dataset(dir, ds);
    json m = manifest(cfg, "inject");
    m["plan"] = plan_to_json(plan);
    m["faulty_samples"] = ds.mask.faulty_count();
    m["total_samples"] = ds.mask.total();
    write_json(dir / "manifest.json", m);
    say(ctx, "injected " + rate_tag(rate) + ": " + std::to_string(ds.mask.faulty_count()) + " faulty samples");
  }
}

void cmd_train_edge(const CommandContext& ctx) {
  const auto& cfg = ctx.config;
  const Layout lay(ctx.workdir, cfg);
  for (double rate : rates_of(ctx)) {
    const auto ds = read_dataset(lay, rate);
    const auto dir = lay.models(rate);
    JsonlLog log(dir / "edge_log.jsonl");
    auto st = train_edge_stage(cfg, ds, log.sink());
    st.model.params().save(dir / "edge.ckpt");
    json meta{{"input_dim", st.model.architecture().input_dim},
              {"hidden", st.model.architecture().hidden},
              {"w", cfg.window.w},
              {"features", st.features.to_json()},
              {"best_epoch", st.result.best_epoch},
              {"best_val_loss", st.result.best_val_loss},
              {"best_val_accuracy", st.result.best_val_accuracy}};
    write_json(dir / "edge_meta.json", meta);
    write_json(dir / "manifest.json", manifest(cfg, "train-edge"));
    say(ctx, "edge model " + rate_tag(rate) + ": best epoch " + std::to_string(st.result.best_epoch) +
                 ", val accuracy " + fmt_double(st.result.best_val_accuracy));
  }
}

void cmd_train_ign(const CommandContext& ctx) {
  const auto& cfg = ctx.config;
  const Layout lay(ctx.workdir, cfg);
  for (double rate : rates_of(ctx)) {
    const auto ds = read_dataset(lay, rate);
    const auto dir = lay.models(rate);
    auto edge = load_edge(dir);
    const auto topo = read_topology(ctx, lay, ds.panel.node_ids);
    JsonlLog log(dir / "ign_log.jsonl");
    auto st = train_ign_stage(cfg, ds, edge.model, edge.features, topo, log.sink());
    st.model.params().save(dir / "ign.ckpt");
    const auto& c = st.model.config();
    json meta{{"input_dim", c.input_dim},
              {"gat_hidden", c.gat_hidden},
              {"gat_layers", c.gat_layers},
              {"iterations", c.iterations},
              {"dropout", c.dropout},
              {"shared_temp_classifier", c.shared_temp_classifier},
              {"self_loops", c.self_loops},
              {"passthrough_head", c.passthrough_head},
              {"best_epoch", st.result.best_epoch},
              {"best_val_loss", st.result.best_val_loss},
              {"best_val_accuracy", st.result.best_val_accuracy}};
    write_json(dir / "ign_meta.json", meta);
    write_json(dir / "manifest.json", manifest(cfg, "train-ign"));
    say(ctx, "graph model " + rate_tag(rate) + ": best epoch " + std::to_string(st.result.best_epoch) +
                 ", val accuracy " + fmt_double(st.result.best_val_accuracy));
  }
}

void cmd_evaluate(const CommandContext& ctx) {
  const auto& cfg = ctx.config;
  const Layout lay(ctx.workdir, cfg);
  for (double rate : rates_of(ctx)) {
    const auto ds = read_dataset(lay, rate);
    auto edge = load_edge(lay.models(rate));
    auto ign = load_ign(lay.models(rate));
    const auto topo = read_topology(ctx, lay, ds.panel.node_ids);
    const auto ev = evaluate_stage(cfg, ds, edge.model, edge.features, ign, topo, rate);
    const auto dir = lay.reports(rate);
    for (const auto* r : {&ev.edge, &ev.hifinet}) {
      write_json(dir / ("metrics_" + r->meta.model + ".json"), report_to_json(*r));
      write_text(dir / ("confusion_" + r->meta.model + ".csv"),
                 render([&](std::ostream& o) { write_confusion_csv(o, r->cm); }));
      write_text(dir / ("pr_" + r->meta.model + ".csv"), render([&](std::ostream& o) { write_pr_csv(o, *r); }));
    }
    write_text(dir / "embeddings.csv",
               render([&](std::ostream& o) { write_embeddings_csv(o, ev.labels, ev.embeddings); }));
    write_json(dir / "manifest.json", manifest(cfg, "evaluate"));
    say(ctx, "evaluated " + rate_tag(rate) + ": edge accuracy " + fmt_double(ev.edge.accuracy) +
                 ", hifinet accuracy " + fmt_double(ev.hifinet.accuracy));
  }
  write_metrics_table(ctx, lay);
}

void cmd_tradeoff(const CommandContext& ctx) {
  const auto& cfg = ctx.config;
  const Layout lay(ctx.workdir, cfg);
  for (double rate : rates_of(ctx)) {
    const auto ds = read_dataset(lay, rate);
    auto edge = load_edge(lay.models(rate));
    auto ign = load_ign(lay.models(rate));
    const auto topo = read_topology(ctx, lay, ds.panel.node_ids);
    const auto ev = evaluate_stage(cfg, ds, edge.model, edge.features, ign, topo, rate);
    const auto rows =
        tradeoff_study(ev.tradeoff_windows, topo, cfg.energy.t_values, cfg.window.w, cfg.energy.params, worker_count());
    const auto dir = lay.reports(rate);
    write_text(dir / "tradeoff.csv", render([&](std::ostream& o) { write_tradeoff_csv(o, rows); }));
    write_json(dir / "manifest.json", manifest(cfg, "tradeoff"));
    say(ctx, "tradeoff " + rate_tag(rate) + ": " + std::to_string(rows.size()) + " rows");
  }
}

void cmd_all(const CommandContext& ctx) {
  cmd_inject(ctx);
  for (double rate : rates_of(ctx)) {
    CommandContext one = ctx;
    one.rate = rate;
    cmd_train_edge(one);
    cmd_train_ign(one);
    cmd_evaluate(one);
    cmd_tradeoff(one);
  }
}

}  // namespace hifinet
