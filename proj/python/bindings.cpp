#include <sstream>

#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "hydrocla/cla.hpp"
#include "hydrocla/cli.hpp"
#include "hydrocla/errors.hpp"
#include "hydrocla/estimator.hpp"
#include "hydrocla/fixtures.hpp"
#include "hydrocla/simulator.hpp"

namespace py = pybind11;
using namespace hydrocla;

namespace {

py::dict state_dict(const HydraulicState& s) {
  py::dict d;
  d["flows"] = s.flows;
  d["heads"] = s.heads;
  d["boundary_flows"] = s.boundary_flows;
  d["state_vector"] = state_vector(s);
  return d;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Loop-flow simulation, state estimation and confidence-limit analysis";

  // Translators run most recent first, so the base class goes in first.
  auto base = py::register_exception<Error>(m, "Error");
  py::register_exception<ParseError>(m, "ParseError", base);
  py::register_exception<ValidationError>(m, "ValidationError", base);
  py::register_exception<NotConverged>(m, "NotConverged", base);

  py::class_<MeasurementSet>(m, "MeasurementSet")
      .def_property_readonly("head_meter_count", [](const MeasurementSet& s) { return s.head_meters.size(); })
      .def_property_readonly("flow_meter_count", [](const MeasurementSet& s) { return s.flow_meters.size(); });

  py::class_<Network>(m, "Network")
      .def_property_readonly("node_count", &Network::node_count)
      .def_property_readonly("link_count", &Network::link_count)
      .def_property_readonly("fixed_head_count", &Network::fixed_head_count)
      .def_property_readonly("node_ids",
                             [](const Network& n) {
                               std::vector<std::string> ids;
                               for (const auto& node : n.nodes()) ids.push_back(node.id);
                               return ids;
                             })
      .def("demands", [](const Network& n) { return to_dense(n.demands()); })
      .def("serialize", &serialize_network);

  m.def("parse_network", [](const std::string& text) { return parse_network(text); });
  m.def("parse_measurements",
        [](const std::string& text, const Network& net) { return parse_measurements(text, net); });
  m.def("fixture_names", &fixture_names);
  m.def("load_fixture", [](const std::string& name) {
    Fixture f = load_fixture(name);
    return py::make_tuple(std::move(f.network), std::move(f.measurements));
  });
  m.def("state_labels", &state_labels);

  m.def(
      "simulate",
      [](const Network& net, std::optional<DenseVector> demands, double tol) {
        SolverOptions o;
        o.tol_loop_residual = tol;
        return state_dict(demands ? simulate(net, *demands, o) : simulate(net, o));
      },
      py::arg("network"), py::arg("demands") = py::none(), py::arg("tol") = 1e-6,
      "Steady state; demands in m^3/s, node order.");

  m.def(
      "estimate",
      [](const Network& net, const MeasurementSet& meas) {
        const EstimateResult r = estimate(net, meas);
        py::dict d = state_dict(r.state);
        d["adjusted_demands"] = r.adjusted_demands;
        d["delta_d"] = r.estimator.delta_d;
        d["clamped_nodes"] = r.clamped_nodes;
        d["second_pass_used"] = r.second_pass_used;
        d["iterations"] = r.estimator.iterations;
        return d;
      },
      py::arg("network"), py::arg("measurements"));

  m.def(
      "esm_confidence_limits",
      [](const Network& net, const MeasurementSet& meas, unsigned threads) {
        ClaOptions o;
        o.threads = threads;
        const BoundedMeasurementVector z = measurement_vector(net, meas);
        const SensitivityMatrix s = build_esm(net, meas, z, o);
        py::dict d;
        d["estimate"] = s.base_vector;
        d["cl"] = cla_from_esm(s, z.half_widths).values;
        d["sensitivity"] = s.entries;
        d["estimator_runs"] = s.estimator_runs;
        return d;
      },
      py::arg("network"), py::arg("measurements"), py::arg("threads") = 1);

  m.def(
      "em_confidence_limits",
      [](const Network& net, const MeasurementSet& meas, const std::string& bound) {
        BoundChoice choice;
        if (bound == "upper") {
          choice = BoundChoice::upper;
        } else if (bound == "lower") {
          choice = BoundChoice::lower;
        } else if (bound == "both") {
          choice = BoundChoice::both;
        } else {
          throw py::value_error("bound must be upper, lower or both");
        }
        const EmResult r = em_confidence_limits(net, meas, measurement_vector(net, meas), choice);
        py::dict d;
        d["estimate"] = r.base_vector;
        d["estimator_runs"] = r.estimator_runs;
        if (r.upper) d["upper"] = r.upper->values;
        if (r.lower) d["lower"] = r.lower->values;
        if (r.t_test) d["p_value"] = r.t_test->p_value;
        return d;
      },
      py::arg("network"), py::arg("measurements"), py::arg("bound") = "upper");

  m.def(
      "run_cli",
      [](const std::vector<std::string>& args) {
        std::ostringstream out, err;
        const int code = run_cli(args, out, err);
        return py::make_tuple(code, out.str(), err.str());
      },
      py::arg("args"), "Runs a hydrocla command; returns (exit status, stdout, stderr).");
}
