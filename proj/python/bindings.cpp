#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <string>
#include <vector>

#include "decant/config.hpp"
#include "decant/errors.hpp"
#include "decant/fl.hpp"
#include "decant/scenario.hpp"
#include "decant/sim.hpp"
#include "decant/wireless.hpp"

namespace py = pybind11;
using nlohmann::json;

namespace {

decant::RunConfig parse_config(const std::string& text) {
  return decant::run_config_from_json(json::parse(text));
}

py::dict simulate(const std::string& config, const std::vector<double>& targets) {
  const auto cfg = parse_config(config);
  decant::RunResult res;
  {
    py::gil_scoped_release release;
    res = decant::run(cfg);
  }
  py::dict out;
  out["csv"] = decant::metrics_csv(res.log);
  out["summary"] = decant::run_summary(res, targets).dump();
  return out;
}

std::string plan(const std::string& config) {
  const auto cfg = parse_config(config);
  const auto env = decant::prepare_environment(cfg);
  return decant::plan_document(cfg, env, decant::make_schedule(cfg, env)).dump();
}

std::string scenario(const std::string& config) {
  auto cfg = json::parse(config).get<decant::ScenarioConfig>();
  return decant::scenario_to_json(cfg, decant::generate_scenario(cfg)).dump();
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Semi-synchronous federated learning scheduler and simulator";
  py::register_exception<decant::InfeasibleError>(m, "InfeasibleError", PyExc_RuntimeError);
  py::register_exception<decant::NonFiniteError>(m, "NonFiniteError", PyExc_ArithmeticError);
  py::register_exception<decant::ParseError>(m, "ParseError", PyExc_ValueError);

  m.def("simulate", &simulate, py::arg("config"), py::arg("targets") = std::vector<double>{},
        "Run one configuration; returns {'csv', 'summary'} with the summary as JSON text.");
  m.def("plan", &plan, py::arg("config"), "Plan document JSON for a run configuration.");
  m.def("scenario", &scenario, py::arg("config"), "Scenario document JSON for a scenario config.");
  m.def("normalize_config", [](const std::string& c) { return json(parse_config(c)).dump(); },
        py::arg("config"), "Validated configuration with defaults filled in.");

  m.def("path_loss_db", [](double d_km) { return decant::wireless::path_loss_db(d_km); },
        py::arg("distance_km"));
  m.def("spectral_efficiency", &decant::wireless::spectral_efficiency, py::arg("tx_power_w"),
        py::arg("gain"), py::arg("noise_w"));
  m.def("tier_waiting_times",
        [](const std::vector<double>& comp, const std::vector<double>& up) {
          return decant::wireless::tier_waiting_times(comp, up);
        },
        py::arg("comp_s"), py::arg("upload_s"));
  m.def("learning_rate", &decant::learning_rate, py::arg("tier"), py::arg("delta1"),
        py::arg("alpha"));
}
