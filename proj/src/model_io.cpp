#include "hbnf/model_io.hpp"

#include "json.hpp"

#include <fstream>
#include <sstream>
#include <utility>
#include <variant>
#include <vector>

namespace hbnf {

namespace {

using json = nlohmann::ordered_json;

double number_at(const json& j, const std::string& where) {
  if (!j.is_number()) throw ModelError(where + ": expected a number");
  return j.get<double>();
}

std::string string_at(const json& j, const std::string& where) {
  if (!j.is_string()) throw ModelError(where + ": expected a string");
  return j.get<std::string>();
}

std::vector<std::string> string_list(const json& j, const std::string& where) {
  if (!j.is_array()) throw ModelError(where + ": expected an array of strings");
  std::vector<std::string> out;
  for (const json& item : j) out.push_back(string_at(item, where));
  return out;
}

std::vector<std::vector<double>> row_list(const json& j, const std::string& where) {
  if (!j.is_array()) throw ModelError(where + ": expected an array of rows");
  std::vector<std::vector<double>> rows;
  for (const json& jr : j) {
    if (!jr.is_array()) throw ModelError(where + ": each row must be an array of numbers");
    std::vector<double> row;
    for (const json& x : jr) row.push_back(number_at(x, where));
    rows.push_back(std::move(row));
  }
  return rows;
}

ParsedCpd parse_expression_text(const std::string& text, const std::string& where) {
  try {
    return parse_cpd(text);
  } catch (const ParseError& e) {
    throw ModelError(where + ": " + e.what() + " at offset " + std::to_string(e.offset));
  }
}

Cpd cpd_from_json(const BayesianNetwork& bn, const NodeId& id, const json& jc) {
  std::string where = "node " + id;
  if (!jc.is_object()) throw ModelError(where + ": cpd must be an object");

  if (jc.contains("table")) {
    const json& jt = jc.at("table");
    TableCpd table;
    if (jt.is_array()) {
      table.rows = row_list(jt, where + ": table");
    } else if (jt.is_object()) {
      if (jt.contains("parents"))
        table.parents = string_list(jt.at("parents"), where + ": table parents");
      if (!jt.contains("rows")) throw ModelError(where + ": table object needs rows");
      table.rows = row_list(jt.at("rows"), where + ": table");
    } else {
      throw ModelError(where + ": table must be a row array or {parents, rows}");
    }
    return table;
  }

  if (jc.contains("expression")) {
    ExpressionCpd e;
    e.parsed = parse_expression_text(string_at(jc.at("expression"), where + ": expression"),
                                     where);
    return e;
  }

  if (jc.contains("partitioned")) {
    const json& jp = jc.at("partitioned");
    if (!jp.is_object() || !jp.contains("control") || !jp.contains("cases"))
      throw ModelError(where + ": partitioned cpd needs control and cases");
    PartitionedCpd p;
    p.control = string_list(jp.at("control"), where + ": control");
    for (const NodeId& ctrl : p.control) {
      if (!bn.has(ctrl)) throw ModelError(where + ": unknown control node: " + ctrl);
      if (bn.at(ctrl).kind != NodeKind::Discrete)
        throw ModelError(where + ": control node is not discrete: " + ctrl);
    }
    std::vector<std::string> labels = joint_state_labels(bn, p.control);
    p.cases.assign(labels.size(), std::nullopt);
    const json& jcases = jp.at("cases");
    if (!jcases.is_object()) throw ModelError(where + ": cases must be an object");
    for (const auto& [label, value] : jcases.items()) {
      auto it = std::find(labels.begin(), labels.end(), label);
      if (it == labels.end())
        throw ModelError(where + ": case label \"" + label +
                         "\" does not match any control state");
      std::size_t idx = static_cast<std::size_t>(it - labels.begin());
      p.cases[idx] = parse_expression_text(string_at(value, where + ": case " + label),
                                           where + ": case " + label);
    }
    return p;
  }

  throw ModelError(where + ": cpd needs one of table, expression, partitioned");
}

json cpd_to_json(const BayesianNetwork& bn, const Node& node) {
  json jc = json::object();
  if (const auto* table = std::get_if<TableCpd>(&node.cpd)) {
    json rows = json::array();
    for (const auto& row : table->rows) rows.push_back(row);
    if (table->parents.empty()) {
      jc["table"] = std::move(rows);
    } else {
      json jt = json::object();
      jt["parents"] = table->parents;
      jt["rows"] = std::move(rows);
      jc["table"] = std::move(jt);
    }
  } else if (const auto* expr = std::get_if<ExpressionCpd>(&node.cpd)) {
    jc["expression"] = print_cpd(expr->parsed);
  } else if (const auto* part = std::get_if<PartitionedCpd>(&node.cpd)) {
    json jp = json::object();
    jp["control"] = part->control;
    json jcases = json::object();
    std::vector<std::string> labels = joint_state_labels(bn, part->control);
    for (std::size_t i = 0; i < part->cases.size() && i < labels.size(); ++i)
      if (part->cases[i]) jcases[labels[i]] = print_cpd(*part->cases[i]);
    jp["cases"] = std::move(jcases);
    jc["partitioned"] = std::move(jp);
  }
  return jc;
}

}  // namespace

ModelFile parse_model(const std::string& json_text) {
  json doc;
  try {
    doc = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw ModelError(std::string("invalid JSON: ") + e.what());
  }
  if (!doc.is_object() || !doc.contains("nodes") || !doc.at("nodes").is_array())
    throw ModelError("model document needs a \"nodes\" array");

  ModelFile mf;

  // Nodes are declared first so later CPDs can reference control-node states
  // regardless of declaration order; CPDs attach in a second pass.
  std::vector<json> raw_cpds;
  std::vector<NodeId> ids;
  for (const json& jn : doc.at("nodes")) {
    if (!jn.is_object() || !jn.contains("id") || !jn.at("id").is_string())
      throw ModelError("every node needs a string id");
    Node nd;
    nd.id = jn.at("id").get<std::string>();
    std::string where = "node " + nd.id;

    std::string kind = jn.value("kind", std::string("continuous"));
    if (kind == "discrete")
      nd.kind = NodeKind::Discrete;
    else if (kind == "continuous")
      nd.kind = NodeKind::Continuous;
    else
      throw ModelError(where + ": unknown kind: " + kind);

    if (jn.contains("states")) nd.states = string_list(jn.at("states"), where + ": states");
    if (jn.contains("range")) {
      const json& jr = jn.at("range");
      if (!jr.is_array() || jr.size() != 2)
        throw ModelError(where + ": range must be [lo, hi]");
      Interval r;
      r.lo = number_at(jr[0], where + ": range");
      r.hi = number_at(jr[1], where + ": range");
      nd.declared_range = r;
    }
    if (!jn.contains("cpd")) throw ModelError(where + ": needs a cpd");
    raw_cpds.push_back(jn.at("cpd"));
    ids.push_back(nd.id);
    try {
      mf.network.add(std::move(nd));
    } catch (const std::invalid_argument& e) {
      throw ModelError(e.what());
    }
  }

  for (std::size_t i = 0; i < ids.size(); ++i)
    mf.network.at(ids[i]).cpd = cpd_from_json(mf.network, ids[i], raw_cpds[i]);

  if (doc.contains("evidence")) {
    const json& je = doc.at("evidence");
    if (!je.is_object()) throw ModelError("evidence must be an object");
    for (const auto& [id, value] : je.items()) {
      if (value.is_string())
        mf.network.evidence[id] = value.get<std::string>();
      else if (value.is_number())
        mf.network.evidence[id] = value.get<double>();
      else
        throw ModelError("evidence " + id + ": expected a state label or number");
    }
  }

  if (doc.contains("partitions")) {
    const json& jp = doc.at("partitions");
    if (!jp.is_object()) throw ModelError("partitions must be an object");
    for (const auto& [id, value] : jp.items()) {
      std::string where = "partition " + id;
      if (!value.is_object() || !value.contains("lo") || !value.contains("hi"))
        throw ModelError(where + ": needs lo and hi");
      Partition p;
      p.node = id;
      p.lo = number_at(value.at("lo"), where);
      p.hi = number_at(value.at("hi"), where);
      if (!(p.lo < p.hi)) throw ModelError(where + ": lo must be below hi");
      if (value.contains("cuts")) {
        const json& jc = value.at("cuts");
        if (!jc.is_array()) throw ModelError(where + ": cuts must be an array");
        double prev = p.lo;
        for (const json& x : jc) {
          double c = number_at(x, where + ": cuts");
          if (!(c > prev && c < p.hi))
            throw ModelError(where + ": cuts must increase strictly inside (lo, hi)");
          p.cuts.push_back(c);
          prev = c;
        }
      }
      mf.partitions[id] = std::move(p);
    }
  }
  return mf;
}

ModelFile load_model(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ModelError("cannot open model file: " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_model(buf.str());
}

std::string serialize_model(const ModelFile& m) {
  json doc = json::object();
  json nodes = json::array();
  for (const Node& nd : m.network.nodes()) {
    json jn = json::object();
    jn["id"] = nd.id;
    jn["kind"] = nd.kind == NodeKind::Discrete ? "discrete" : "continuous";
    if (!nd.states.empty()) jn["states"] = nd.states;
    if (nd.declared_range)
      jn["range"] = json::array({nd.declared_range->lo, nd.declared_range->hi});
    jn["cpd"] = cpd_to_json(m.network, nd);
    nodes.push_back(std::move(jn));
  }
  doc["nodes"] = std::move(nodes);

  if (!m.network.evidence.empty()) {
    json je = json::object();
    for (const auto& [id, value] : m.network.evidence) {
      if (const auto* label = std::get_if<std::string>(&value))
        je[id] = *label;
      else
        je[id] = std::get<double>(value);
    }
    doc["evidence"] = std::move(je);
  }

  if (!m.partitions.empty()) {
    json jp = json::object();
    for (const auto& [id, part] : m.partitions) {
      json entry = json::object();
      entry["lo"] = part.lo;
      entry["hi"] = part.hi;
      entry["cuts"] = part.cuts;
      jp[id] = std::move(entry);
    }
    doc["partitions"] = std::move(jp);
  }
  return doc.dump(2) + "\n";
}

void save_model(const ModelFile& m, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ModelError("cannot write model file: " + path);
  out << serialize_model(m);
}

}  // namespace hbnf
