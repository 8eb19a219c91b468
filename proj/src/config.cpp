#include "hifinet/config.hpp"

#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

#include "hifinet/error.hpp"

namespace hifinet {

using nlohmann::json;

namespace {

// Reads fields of one JSON object and rejects keys nobody asked for.
class Section {
 public:
  Section(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) throw ConfigError(where("") + " must be an object");
  }
  ~Section() noexcept(false) {
    if (std::uncaught_exceptions()) return;
    for (const auto& [k, v] : j_.items())
      if (!seen_.count(k)) throw ConfigError("unknown config key '" + where(k) + "'");
  }

  template <class T>
  void get(const char* key, T& out) {
    seen_.insert(key);
    if (!j_.contains(key)) return;
    try {
      out = j_.at(key).get<T>();
    } catch (const json::exception& e) {
      throw ConfigError("config key '" + where(key) + "': " + e.what());
    }
  }
  bool has(const char* key) {
    seen_.insert(key);
    return j_.contains(key) && !j_.at(key).is_null();
  }
  Section sub(const char* key) {
    seen_.insert(key);
    static const json empty = json::object();
    return Section(j_.contains(key) ? j_.at(key) : empty, where(key));
  }
  const json& raw(const char* key) {
    seen_.insert(key);
    return j_.at(key);
  }
  std::string where(const std::string& k) const { return path_.empty() ? k : k.empty() ? path_ : path_ + "." + k; }

 private:
  const json& j_;
  std::string path_;
  std::set<std::string> seen_;
};

FaultClass class_or_throw(const std::string& name) {
  auto c = parse_class(name);
  if (!c) throw ConfigError("unknown fault class '" + name + "'");
  return *c;
}

}  // namespace

ExperimentConfig config_from_json(const json& j) {
  ExperimentConfig c;
  Section root(j, "");
  root.get("seed", c.seed);
  root.get("output_dir", c.output_dir);
  {
    auto s = root.sub("data");
    s.get("source", c.data.source);
    s.get("intel_path", c.data.intel_path);
    if (s.has("csv_paths")) {
      const json& m = s.raw("csv_paths");
      if (!m.is_object()) throw ConfigError("data.csv_paths must map node ids to paths");
      for (const auto& [k, v] : m.items()) {
        try {
          c.data.csv_paths[std::stoi(k)] = v.get<std::string>();
        } catch (const std::exception&) {
          throw ConfigError("data.csv_paths: bad entry '" + k + "'");
        }
      }
    }
    s.get("nodes", c.data.nodes);
    s.get("grid_interval_s", c.data.grid_interval_s);
    s.get("min_valid", c.data.min_valid);
    s.get("max_valid", c.data.max_valid);
    if (s.has("time_range")) {
      auto r = s.sub("time_range");
      TimeRange tr;
      r.get("start", tr.start);
      r.get("end", tr.end);
      c.data.time_range = tr;
    }
    auto g = s.sub("synthetic");
    auto& p = c.data.synthetic;
    g.get("n_nodes", p.n_nodes);
    g.get("n_days", p.n_days);
    g.get("sample_interval_s", p.sample_interval_s);
    g.get("base_temp", p.base_temp);
    g.get("daily_amplitude", p.daily_amplitude);
    g.get("noise_sigma", p.noise_sigma);
    g.get("node_offset_sigma", p.node_offset_sigma);
    g.get("start_epoch", p.start_epoch);
    g.get("seed", p.seed);
  }
  {
    auto s = root.sub("window");
    auto& w = c.window;
    s.get("w", w.w);
    s.get("stride", w.stride);
    s.get("eval_stride", w.eval_stride);
    s.get("tradeoff_stride", w.tradeoff_stride);
    s.get("block_len", w.block_len);
    s.get("test_every", w.test_every);
    s.get("holdout_every", w.holdout_every);
    s.get("features", w.features);
  }
  {
    auto s = root.sub("injection");
    auto& in = c.injection;
    s.get("rates", in.rates);
    s.get("seed", in.seed);
    if (s.has("node_to_fault")) {
      const json& m = s.raw("node_to_fault");
      if (!m.is_object()) throw ConfigError("injection.node_to_fault must be an object");
      for (const auto& [k, v] : m.items()) {
        int id = 0;
        try {
          id = std::stoi(k);
        } catch (const std::exception&) {
          throw ConfigError("injection.node_to_fault: bad node id '" + k + "'");
        }
        if (!v.is_string()) throw ConfigError("injection.node_to_fault values must be class names");
        in.node_to_fault[id] = class_or_throw(v.get<std::string>());
      }
    }
    auto& f = in.params;
    s.get("b_hardover", f.b_hardover);
    s.get("hardover_range", f.hardover_range);
    s.get("hardover_min", f.hardover_min);
    s.get("hardover_max", f.hardover_max);
    s.get("b_drift", f.b_drift);
    s.get("b_spike", f.b_spike);
    s.get("erratic_sigma_factor", f.erratic_sigma_factor);
    s.get("erratic_factor_is_variance", f.erratic_factor_is_variance);
    if (s.has("stuck_mode")) {
      std::string m;
      s.get("stuck_mode", m);
      f.stuck_mode = parse_stuck_mode(m);
    }
    s.get("persistent_episode_len", f.persistent_episode_len);
    s.get("erratic_episode_len", f.erratic_episode_len);
  }
  {
    auto s = root.sub("edge");
    auto& e = c.edge;
    s.get("hidden", e.hidden);
    s.get("pretrain_epochs", e.pretrain_epochs);
    s.get("finetune_epochs", e.finetune_epochs);
    s.get("lr", e.lr);
    s.get("batch_size", e.batch_size);
    s.get("patience", e.patience);
    s.get("val_fraction", e.val_fraction);
    s.get("pretrain_clean_only", e.pretrain_clean_only);
  }
  {
    auto s = root.sub("ign");
    auto& g = c.ign;
    s.get("iterations", g.model.iterations);
    s.get("gat_hidden", g.model.gat_hidden);
    s.get("gat_layers", g.model.gat_layers);
    s.get("dropout", g.model.dropout);
    s.get("shared_temp_classifier", g.model.shared_temp_classifier);
    s.get("self_loops", g.model.self_loops);
    s.get("passthrough_head", g.model.passthrough_head);
    s.get("epochs", g.epochs);
    s.get("lr", g.lr);
    s.get("batch_size", g.batch_size);
    s.get("patience", g.patience);
    s.get("val_fraction", g.val_fraction);
    s.get("temp_loss_weight", g.temp_loss_weight);
  }
  {
    auto s = root.sub("topology");
    s.get("path", c.topology.path);
    s.get("spacing", c.topology.spacing);
    s.get("radius", c.topology.radius);
  }
  {
    auto s = root.sub("energy");
    auto& p = c.energy.params;
    s.get("eps_elec", p.eps_elec);
    s.get("eps_fs", p.eps_fs);
    s.get("eps_da", p.eps_da);
    s.get("eps_mp", p.eps_mp);
    s.get("coap_overhead_bytes", p.coap_overhead_bytes);
    s.get("value_bytes", p.value_bytes);
    s.get("t_values", c.energy.t_values);
  }
  c.ign.model.input_dim = kNumClasses + (c.edge.hidden.empty() ? 0 : c.edge.hidden.back());
  return c;
}

json config_to_json(const ExperimentConfig& c) {
  json j;
  j["seed"] = c.seed;
  j["output_dir"] = c.output_dir;
  auto& d = j["data"];
  d["source"] = c.data.source;
  d["intel_path"] = c.data.intel_path;
  d["csv_paths"] = json::object();
  for (const auto& [k, v] : c.data.csv_paths) d["csv_paths"][std::to_string(k)] = v;
  d["nodes"] = c.data.nodes;
  d["grid_interval_s"] = c.data.grid_interval_s;
  d["min_valid"] = c.data.min_valid;
  d["max_valid"] = c.data.max_valid;
  if (c.data.time_range) d["time_range"] = {{"start", c.data.time_range->start}, {"end", c.data.time_range->end}};
  const auto& p = c.data.synthetic;
  d["synthetic"] = {{"n_nodes", p.n_nodes},
                    {"n_days", p.n_days},
                    {"sample_interval_s", p.sample_interval_s},
                    {"base_temp", p.base_temp},
                    {"daily_amplitude", p.daily_amplitude},
                    {"noise_sigma", p.noise_sigma},
                    {"node_offset_sigma", p.node_offset_sigma},
                    {"start_epoch", p.start_epoch},
                    {"seed", p.seed}};
  const auto& w = c.window;
  j["window"] = {{"w", w.w},
                 {"stride", w.stride},
                 {"eval_stride", w.eval_stride},
                 {"tradeoff_stride", w.tradeoff_stride},
                 {"block_len", w.block_len},
                 {"test_every", w.test_every},
                 {"holdout_every", w.holdout_every},
                 {"features", w.features}};
  const auto& f = c.injection.params;
  auto& in = j["injection"];
  in = {{"rates", c.injection.rates},
        {"seed", c.injection.seed},
        {"b_hardover", f.b_hardover},
        {"hardover_range", f.hardover_range},
        {"hardover_min", f.hardover_min},
        {"hardover_max", f.hardover_max},
        {"b_drift", f.b_drift},
        {"b_spike", f.b_spike},
        {"erratic_sigma_factor", f.erratic_sigma_factor},
        {"erratic_factor_is_variance", f.erratic_factor_is_variance},
        {"stuck_mode", stuck_mode_name(f.stuck_mode)},
        {"persistent_episode_len", f.persistent_episode_len},
        {"erratic_episode_len", f.erratic_episode_len}};
  in["node_to_fault"] = json::object();
  for (const auto& [k, v] : c.injection.node_to_fault) in["node_to_fault"][std::to_string(k)] = std::string(class_name(v));
  const auto& e = c.edge;
  j["edge"] = {{"hidden", e.hidden},
               {"pretrain_epochs", e.pretrain_epochs},
               {"finetune_epochs", e.finetune_epochs},
               {"lr", e.lr},
               {"batch_size", e.batch_size},
               {"patience", e.patience},
               {"val_fraction", e.val_fraction},
               {"pretrain_clean_only", e.pretrain_clean_only}};
  const auto& g = c.ign;
  j["ign"] = {{"iterations", g.model.iterations},
              {"gat_hidden", g.model.gat_hidden},
              {"gat_layers", g.model.gat_layers},
              {"dropout", g.model.dropout},
              {"shared_temp_classifier", g.model.shared_temp_classifier},
              {"self_loops", g.model.self_loops},
              {"passthrough_head", g.model.passthrough_head},
              {"epochs", g.epochs},
              {"lr", g.lr},
              {"batch_size", g.batch_size},
              {"patience", g.patience},
              {"val_fraction", g.val_fraction},
              {"temp_loss_weight", g.temp_loss_weight}};
  j["topology"] = {{"path", c.topology.path}, {"spacing", c.topology.spacing}, {"radius", c.topology.radius}};
  const auto& ep = c.energy.params;
  j["energy"] = {{"eps_elec", ep.eps_elec},
                 {"eps_fs", ep.eps_fs},
                 {"eps_da", ep.eps_da},
                 {"eps_mp", ep.eps_mp},
                 {"coap_overhead_bytes", ep.coap_overhead_bytes},
                 {"value_bytes", ep.value_bytes},
                 {"t_values", c.energy.t_values}};
  return j;
}

void ExperimentConfig::validate(const std::filesystem::path& base) const {
  auto resolve = [&](const std::string& p) { return base.empty() ? std::filesystem::path(p) : base / p; };
  if (data.source == "intel") {
    if (data.intel_path.empty() || !std::filesystem::exists(resolve(data.intel_path)))
      throw ConfigError("data.intel_path does not exist: '" + data.intel_path + "'");
  } else if (data.source == "csv") {
    if (data.csv_paths.empty()) throw ConfigError("data.csv_paths is empty");
    for (const auto& [id, p] : data.csv_paths)
      if (!std::filesystem::exists(resolve(p))) throw ConfigError("csv file for node " + std::to_string(id) + " does not exist: '" + p + "'");
  } else if (data.source == "synthetic") {
    if (data.synthetic.n_nodes < 1) throw ConfigError("data.synthetic.n_nodes must be >= 1");
    if (!(data.synthetic.n_days > 0) || !(data.synthetic.sample_interval_s > 0))
      throw ConfigError("data.synthetic: days and interval must be positive");
    if (!(data.synthetic.noise_sigma >= 0)) throw ConfigError("data.synthetic.noise_sigma must be >= 0");
  } else {
    throw ConfigError("data.source must be synthetic, intel or csv");
  }
  if (!(data.grid_interval_s > 0)) throw ConfigError("data.grid_interval_s must be positive");
  if (window.w < 2) throw ConfigError("window.w must be >= 2");
  if (window.stride < 1 || window.eval_stride < 1) throw ConfigError("window strides must be >= 1");
  if (window.block_len < window.w) throw ConfigError("window.block_len must be >= w");
  if (window.test_every < 2) throw ConfigError("window.test_every must be >= 2");
  if (window.holdout_every == 1) throw ConfigError("window.holdout_every must be 0 or >= 2");
  if (window.features != "value" && window.features != "value+diff")
    throw ConfigError("window.features must be 'value' or 'value+diff'");
  if (injection.rates.empty()) throw ConfigError("injection.rates is empty");
  for (double r : injection.rates)
    if (!(r >= 0 && r < 1)) throw ConfigError("injection rates must lie in [0, 1)");
  if (edge.hidden.empty()) throw ConfigError("edge.hidden needs at least one layer");
  for (auto h : edge.hidden)
    if (h == 0) throw ConfigError("edge.hidden sizes must be positive");
  if (!(edge.lr > 0) || !(ign.lr > 0)) throw ConfigError("learning rates must be positive");
  if (edge.batch_size == 0 || ign.batch_size == 0) throw ConfigError("batch sizes must be positive");
  if (!(edge.val_fraction >= 0 && edge.val_fraction < 1) || !(ign.val_fraction >= 0 && ign.val_fraction < 1))
    throw ConfigError("val_fraction must lie in [0, 1)");
  ign.model.validate();
  if (!topology.path.empty() && !std::filesystem::exists(resolve(topology.path)))
    throw ConfigError("topology.path does not exist: '" + topology.path + "'");
  energy.params.validate();
  if (energy.t_values.empty()) throw ConfigError("energy.t_values is empty");
  if (output_dir.empty()) throw ConfigError("output_dir is empty");
}

void apply_override(json& j, const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos || eq == 0) throw ConfigError("override must look like key.path=value: '" + assignment + "'");
  const std::string path = assignment.substr(0, eq), text = assignment.substr(eq + 1);
  json value = json::parse(text, nullptr, false);
  if (value.is_discarded()) value = text;
  json* node = &j;
  std::size_t pos = 0;
  for (;;) {
    const auto dot = path.find('.', pos);
    const std::string key = path.substr(pos, dot == std::string::npos ? std::string::npos : dot - pos);
    if (key.empty()) throw ConfigError("override has an empty key segment: '" + path + "'");
    if (!node->is_object()) throw ConfigError("override path '" + path + "' crosses a non-object");
    if (dot == std::string::npos) {
      (*node)[key] = value;
      return;
    }
    node = &(*node)[key];
    if (node->is_null()) *node = json::object();
    pos = dot + 1;
  }
}

ExperimentConfig load_config(const std::filesystem::path& path, const std::vector<std::string>& overrides) {
  json j = json::object();
  if (!path.empty()) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot read config file " + path.string());
    try {
      j = json::parse(in);
    } catch (const json::exception& e) {
      throw ConfigError("config file " + path.string() + " is not valid JSON: " + e.what());
    }
  }
  for (const auto& o : overrides) apply_override(j, o);
  return config_from_json(j);
}

std::string config_hash(const ExperimentConfig& c) {
  const std::string text = config_to_json(c).dump();
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char ch : text) {
    h ^= ch;
    h *= 1099511628211ull;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

std::string rate_tag(double rate) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "rate_%.2f", rate);
  return buf;
}

}  // namespace hifinet
