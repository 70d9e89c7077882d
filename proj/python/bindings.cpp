#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <string>

#include "varshap/dag.hpp"
#include "varshap/pipeline.hpp"
#include "varshap/report_io.hpp"
#include "varshap/synthetic.hpp"

namespace py = pybind11;

namespace {

std::string attribute_json(const std::string& config_json) {
  varshap::RunConfig config = varshap::parse_run_config_json(config_json);
  varshap::AttributeResult result = varshap::run_attribute(config);
  std::string out = "[";
  for (size_t i = 0; i < result.reports.size(); ++i) {
    if (i) out += ",";
    out += varshap::report_to_json(result.reports[i]);
  }
  out += "]";
  return out;
}

std::string verify_json(const std::string& config_json) {
  varshap::RunConfig config = varshap::parse_run_config_json(config_json);
  varshap::VerifyResult result = varshap::run_verify(config);
  return varshap::verdicts_to_json(result.verdicts);
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "variance-reduction attribution for regression models (C++ core)";

  m.def(
      "count_orderings",
      [](const std::string& dag_json) {
        varshap::CausalDag dag = varshap::parse_dag_text(dag_json);
        dag.validate();
        return py::make_tuple(varshap::count_orderings(dag), varshap::count_prefix_sets(dag));
      },
      py::arg("dag_json"),
      "Exact (admissible orderings, distinct nonempty prefixes) for a DAG given as JSON text");

  m.def(
      "analytic_oracle",
      [](const std::string& example, const std::string& quantity) {
        return varshap::analytic_oracle(varshap::parse_example_id(example),
                                        varshap::parse_oracle_quantity(quantity));
      },
      py::arg("example"), py::arg("quantity"),
      "Closed-form population value for a built-in generator");

  m.def(
      "generate_synthetic",
      [](const std::string& example, int n, uint64_t seed) {
        varshap::Dataset data =
            varshap::generate_synthetic({varshap::parse_example_id(example), n, seed});
        py::dict features;
        for (int f = 0; f < data.feature_count(); ++f) {
          features[py::str(data.feature_names[f])] = data.columns[f];
        }
        py::dict out;
        out["features"] = features;
        out["target_name"] = data.target_name;
        out["target"] = data.target;
        return out;
      },
      py::arg("example"), py::arg("n") = 10000, py::arg("seed") = 1,
      "Deterministic synthetic dataset as {features: {name: values}, target_name, target}");

  m.def("attribute_json", &attribute_json, py::arg("config_json"),
        py::call_guard<py::gil_scoped_release>(),
        "Run the ordered attribution pipeline; returns a JSON array of per-mode reports");

  m.def("verify_json", &verify_json, py::arg("config_json"),
        py::call_guard<py::gil_scoped_release>(),
        "Run the identity/bound checks; returns a JSON array of verdicts");
}
