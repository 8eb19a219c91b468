#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "hifinet/commands.hpp"
#include "hifinet/error.hpp"
#include "hifinet/report.hpp"

namespace py = pybind11;
using namespace hifinet;

namespace {

// JSON crosses the boundary as text; the Python side decodes it.
ExperimentConfig config_from_text(const std::string& text) {
  return text.empty() ? ExperimentConfig{} : config_from_json(nlohmann::json::parse(text));
}

void run_command(const std::string& name, const std::string& config_json, const std::string& workdir,
                 std::optional<double> rate) {
  using Cmd = void (*)(const CommandContext&);
  const std::pair<const char*, Cmd> commands[] = {
      {"gen-synthetic", cmd_gen_synthetic}, {"inject", cmd_inject},     {"train-edge", cmd_train_edge},
      {"train-ign", cmd_train_ign},         {"evaluate", cmd_evaluate}, {"tradeoff", cmd_tradeoff},
      {"all", cmd_all}};
  CommandContext ctx;
  ctx.config = config_from_text(config_json);
  ctx.workdir = workdir;
  ctx.rate = rate;
  ctx.config.validate(ctx.workdir);
  for (const auto& [n, fn] : commands)
    if (name == n) {
      py::gil_scoped_release release;
      fn(ctx);
      return;
    }
  throw ConfigError("unknown command '" + name + "'");
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "HiFiNet fault diagnosis core";
  m.attr("__version__") = kToolkitVersion;

  auto base = py::register_exception<Error>(m, "HifinetError");
  auto data = py::register_exception<DataError>(m, "DataError", base.ptr());
  py::register_exception<ConfigError>(m, "ConfigError", base.ptr());
  py::register_exception<DivergenceError>(m, "DivergenceError", base.ptr());
  py::register_exception<ShapeError>(m, "ShapeError", base.ptr());
  py::register_exception<DomainError>(m, "DomainError", base.ptr());
  py::register_exception<DegenerateLabelsError>(m, "DegenerateLabelsError", data.ptr());

  m.def("class_names", [] {
    std::vector<std::string> out;
    for (FaultClass c : kAllClasses) out.emplace_back(class_name(c));
    return out;
  });

  m.def("default_config", [] { return config_to_json(ExperimentConfig{}).dump(); });
  m.def("normalize_config", [](const std::string& text) { return config_to_json(config_from_text(text)).dump(); },
        "Fills defaults and rejects unknown keys.");
  m.def("config_hash", [](const std::string& text) { return config_hash(config_from_text(text)); });

  m.def("link_energy", [](double bits, double d) { return link_energy(bits, d); }, py::arg("bits"),
        py::arg("distance_m"));
  m.def("payload_bits", [](std::size_t w) { return payload_bits(w); }, py::arg("w"));
  m.def(
      "schedule_energy",
      [](const std::vector<int>& node_ids, std::size_t n_windows, std::size_t t, std::size_t w) {
        const auto s = schedule_energy(Topology::grid(node_ids), n_windows, t, w);
        return py::dict(py::arg("rounds") = s.rounds, py::arg("round_energy") = s.round_energy,
                        py::arg("total") = s.total(), py::arg("efficiency") = s.efficiency());
      },
      py::arg("node_ids"), py::arg("n_windows"), py::arg("t"), py::arg("w") = 24,
      "Energy of a time-delay schedule on the default grid layout.");

  m.def(
      "window_label",
      [](const std::vector<std::size_t>& samples) {
        std::vector<FaultClass> s;
        for (auto k : samples) s.push_back(class_from_index(k));
        return class_index(window_label(s));
      },
      "Label of a window given per-sample class indices.");

  m.def(
      "metrics",
      [](const std::vector<std::size_t>& truth, const std::vector<std::vector<double>>& probs) {
        return report_to_json(make_report(truth, probs, ReportMeta{"python", 0, "external", 0})).dump();
      },
      py::arg("truth"), py::arg("probabilities"));
  m.def("f1_drop", &f1_drop, py::arg("f1_low_rate"), py::arg("f1_high_rate"));

  m.def("run_command", &run_command, py::arg("name"), py::arg("config_json") = "", py::arg("workdir") = ".",
        py::arg("rate") = std::nullopt);
}
