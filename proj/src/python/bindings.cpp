#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "json.hpp"

#include "hbnf/discretize.hpp"
#include "hbnf/factorize.hpp"
#include "hbnf/fixtures.hpp"
#include "hbnf/inference.hpp"
#include "hbnf/model.hpp"
#include "hbnf/model_io.hpp"

#include <string>
#include <vector>

namespace py = pybind11;
using json = nlohmann::ordered_json;

namespace {

json report_to_json(const hbnf::RewriteReport& rep) {
  json doc = json::object();
  doc["max_cpd_size"] = {{"before", rep.max_cpd_size_before},
                         {"after", rep.max_cpd_size_after}};
  doc["max_continuous_parents"] = {{"before", rep.max_continuous_parents_before},
                                   {"after", rep.max_continuous_parents_after}};
  json created = json::array();
  for (const auto& c : rep.created)
    created.push_back({{"id", c.id}, {"role", std::string(1, c.role)}, {"source", c.source}});
  doc["created"] = std::move(created);
  return doc;
}

std::string gen(const std::string& name) {
  hbnf::ModelFile mf;
  mf.network = hbnf::make_fixture(name);
  return hbnf::serialize_model(mf);
}

std::vector<std::string> validate_text(const std::string& model_json) {
  hbnf::ModelFile mf = hbnf::parse_model(model_json);
  std::vector<std::string> out;
  for (const auto& v : hbnf::validate(mf.network)) out.push_back(hbnf::describe(v));
  return out;
}

py::tuple transform(const std::string& model_json, bool bf, bool sf,
                    const std::string& sf_mode) {
  hbnf::ModelFile mf = hbnf::parse_model(model_json);
  hbnf::SfMode mode =
      sf_mode == "explicit" ? hbnf::SfMode::Explicit : hbnf::SfMode::Compact;

  hbnf::BayesianNetwork current = mf.network;
  hbnf::RewriteReport rep;
  rep.max_cpd_size_before = hbnf::max_cpd_size(current);
  rep.max_cpd_size_after = rep.max_cpd_size_before;
  rep.max_continuous_parents_before = hbnf::max_continuous_parents(current);
  rep.max_continuous_parents_after = rep.max_continuous_parents_before;

  bool first = true;
  if (bf) {
    auto [net, r] = hbnf::binary_factorize(current);
    current = std::move(net);
    rep = r;
    first = false;
  }
  if (sf) {
    auto [net, r] = hbnf::stacking_factorize(current, mode);
    current = std::move(net);
    rep = first ? r : hbnf::merge_reports(rep, r);
  }
  hbnf::ModelFile out{std::move(current), mf.partitions};
  return py::make_tuple(hbnf::serialize_model(out), report_to_json(rep).dump(2));
}

std::string report(const std::string& model_json) {
  hbnf::ModelFile mf = hbnf::parse_model(model_json);
  hbnf::StructureMetrics sm = hbnf::metrics(mf.network);
  json doc = json::object();
  doc["tree_width"] = sm.tree_width;
  doc["max_potential_size"] = sm.max_potential_size;
  doc["max_cpd_size"] = hbnf::max_cpd_size(mf.network);
  doc["clusters"] = sm.cluster_sizes;
  return doc.dump(2);
}

std::string infer(const std::string& model_json, std::size_t states) {
  hbnf::ModelFile mf = hbnf::parse_model(model_json);
  hbnf::DiscretizedBn compiled;
  std::map<hbnf::NodeId, std::vector<double>> marginals;
  bool consistent = true;

  if (states > 0) {
    auto ranges = hbnf::working_ranges(mf.network);
    hbnf::PartitionMap parts;
    for (const hbnf::Node& nd : mf.network.nodes())
      if (nd.kind == hbnf::NodeKind::Continuous) {
        const hbnf::Interval& r = ranges.at(nd.id);
        parts[nd.id] = hbnf::uniform_partition(nd.id, r.lo, r.hi, states);
      }
    compiled = hbnf::compile(mf.network, parts);
    hbnf::InferenceResult res = hbnf::run_inference(compiled);
    marginals = std::move(res.marginals);
    consistent = res.consistent;
  } else {
    hbnf::DdResult res = hbnf::dynamic_discretize(mf.network);
    compiled = std::move(res.compiled);
    marginals = std::move(res.marginals);
    consistent = res.consistent;
  }

  json doc = json::object();
  doc["consistent"] = consistent;
  json nodes = json::object();
  for (const hbnf::NodeId& id : compiled.var_names) {
    json entry = json::object();
    entry["states"] =
        compiled.state_labels[static_cast<std::size_t>(compiled.var_of(id))];
    entry["probs"] = marginals.at(id);
    nodes[id] = std::move(entry);
  }
  doc["marginals"] = std::move(nodes);
  return doc.dump(2);
}

std::vector<double> alphas(const std::vector<double>& weights) {
  return hbnf::alpha_weights(weights).alphas;
}

}  // namespace

PYBIND11_MODULE(hbnf, m) {
  m.doc() = "Hybrid network factorizing toolkit";

  m.def("gen", &gen, py::arg("name"),
        "Serialize a bundled reference model to its JSON form");
  m.def("fixture_names", &hbnf::fixture_names, "Names accepted by gen()");
  m.def("validate", &validate_text, py::arg("model_json"),
        "Structural violations of a model, one description per entry");
  m.def("transform", &transform, py::arg("model_json"), py::arg("bf") = true,
        py::arg("sf") = true, py::arg("sf_mode") = "compact",
        "Rewrite a model's CPDs; returns (model_json, report_json)");
  m.def("report", &report, py::arg("model_json"),
        "Structural metrics of a model as a JSON object");
  m.def("infer", &infer, py::arg("model_json"), py::arg("states") = 0,
        "Discretize (uniformly at `states`, or adaptively when 0) and return "
        "marginals as a JSON object");
  m.def("alpha_weights", &alphas, py::arg("weights"),
        "Pairwise stacking coefficients of a mixture weight vector");

  py::register_exception<hbnf::ModelError>(m, "ModelError", PyExc_ValueError);
}
