#include "CLI11.hpp"
#include "json.hpp"

#include "hbnf/bench.hpp"
#include "hbnf/discretize.hpp"
#include "hbnf/factorize.hpp"
#include "hbnf/fixtures.hpp"
#include "hbnf/inference.hpp"
#include "hbnf/model.hpp"
#include "hbnf/model_io.hpp"

#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

namespace {

using json = nlohmann::ordered_json;

constexpr int kOk = 0;
constexpr int kUsage = 1;
constexpr int kInputError = 2;
constexpr int kInconsistent = 3;

void write_text(const std::string& path, const std::string& text) {
  if (path.empty() || path == "-") {
    std::cout << text;
    return;
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw hbnf::ModelError("cannot write output file: " + path);
  out << text;
}

/// Loads a model and insists it is structurally valid; violations go to
/// stderr and surface as an input error.
hbnf::ModelFile load_valid(const std::string& path) {
  hbnf::ModelFile mf = hbnf::load_model(path);
  std::vector<hbnf::Violation> violations = hbnf::validate(mf.network);
  if (!violations.empty()) {
    std::ostringstream msg;
    msg << path << ": model is invalid:";
    for (const auto& v : violations) msg << "\n  " << hbnf::describe(v);
    throw hbnf::ModelError(msg.str());
  }
  return mf;
}

json report_json(const hbnf::RewriteReport& rep) {
  json doc = json::object();
  doc["max_cpd_size"] = {{"before", rep.max_cpd_size_before},
                         {"after", rep.max_cpd_size_after}};
  doc["max_continuous_parents"] = {{"before", rep.max_continuous_parents_before},
                                   {"after", rep.max_continuous_parents_after}};
  json created = json::array();
  for (const auto& c : rep.created)
    created.push_back({{"id", c.id}, {"role", std::string(1, c.role)}, {"source", c.source}});
  doc["created"] = std::move(created);
  json rewritten = json::array();
  for (const auto& c : rep.rewritten)
    rewritten.push_back(
        {{"node", c.node}, {"size_before", c.size_before}, {"size_after", c.size_after}});
  doc["rewritten"] = std::move(rewritten);
  json stats = json::array();
  for (const auto& p : rep.partitions)
    stats.push_back({{"node", p.node},
                     {"components", p.components},
                     {"splittable_parents", p.splittable_parents}});
  doc["partition_stats"] = std::move(stats);
  return doc;
}

int cmd_transform(const std::string& input, const std::string& output, bool bf, bool sf,
                  const std::string& sf_mode) {
  hbnf::ModelFile mf = load_valid(input);
  hbnf::SfMode mode =
      sf_mode == "explicit" ? hbnf::SfMode::Explicit : hbnf::SfMode::Compact;

  hbnf::BayesianNetwork current = mf.network;
  hbnf::RewriteReport report;
  report.max_cpd_size_before = hbnf::max_cpd_size(current);
  report.max_cpd_size_after = report.max_cpd_size_before;
  report.max_continuous_parents_before = hbnf::max_continuous_parents(current);
  report.max_continuous_parents_after = report.max_continuous_parents_before;

  bool first = true;
  if (bf) {
    auto [net, rep] = hbnf::binary_factorize(current);
    current = std::move(net);
    report = rep;
    first = false;
  }
  if (sf) {
    auto [net, rep] = hbnf::stacking_factorize(current, mode);
    current = std::move(net);
    report = first ? rep : hbnf::merge_reports(report, rep);
  }

  hbnf::ModelFile out;
  out.network = std::move(current);
  out.partitions = mf.partitions;
  hbnf::save_model(out, output);
  std::cout << report_json(report).dump(2) << "\n";
  return kOk;
}

hbnf::PartitionMap partitions_from_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw hbnf::ModelError("cannot open partitions file: " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  json doc;
  try {
    doc = json::parse(buf.str());
  } catch (const json::parse_error& e) {
    throw hbnf::ModelError(path + ": invalid JSON: " + e.what());
  }
  // Accept either a full model file or a bare {node: {lo, hi, cuts}} object.
  json wrapper = json::object();
  wrapper["nodes"] = json::array();
  wrapper["partitions"] = doc.is_object() && doc.contains("partitions")
                              ? doc.at("partitions")
                              : doc;
  return hbnf::parse_model(wrapper.dump()).partitions;
}

int cmd_infer(const std::string& input, const std::string& output,
              const std::vector<std::string>& evidence_args, bool use_dd,
              std::optional<std::size_t> states, double ree_threshold,
              const std::string& fixed_partitions) {
  hbnf::ModelFile mf = load_valid(input);
  hbnf::BayesianNetwork& bn = mf.network;

  for (const std::string& item : evidence_args) {
    auto eq = item.find('=');
    if (eq == std::string::npos || eq == 0) {
      std::cerr << "evidence must be id=value: " << item << "\n";
      return kUsage;
    }
    std::string id = item.substr(0, eq);
    std::string value = item.substr(eq + 1);
    if (!bn.has(id)) throw hbnf::ModelError("evidence on unknown node: " + id);
    if (bn.at(id).kind == hbnf::NodeKind::Discrete) {
      bn.evidence[id] = value;
    } else {
      try {
        std::size_t used = 0;
        double x = std::stod(value, &used);
        if (used != value.size()) throw std::invalid_argument(value);
        bn.evidence[id] = x;
      } catch (const std::exception&) {
        throw hbnf::ModelError("evidence for continuous node " + id +
                               " must be numeric: " + value);
      }
    }
  }
  {
    std::vector<hbnf::Violation> violations = hbnf::validate(bn);
    if (!violations.empty()) {
      std::ostringstream msg;
      msg << "evidence is invalid:";
      for (const auto& v : violations) msg << "\n  " << hbnf::describe(v);
      throw hbnf::ModelError(msg.str());
    }
  }

  hbnf::DiscretizedBn compiled;
  std::map<hbnf::NodeId, std::vector<double>> marginals;
  bool consistent = true;

  bool model_partitions_complete = true;
  for (const hbnf::Node& nd : bn.nodes())
    if (nd.kind == hbnf::NodeKind::Continuous && !mf.partitions.count(nd.id))
      model_partitions_complete = false;

  if (!fixed_partitions.empty()) {
    compiled = hbnf::compile(bn, partitions_from_file(fixed_partitions));
  } else if (states) {
    auto ranges = hbnf::working_ranges(bn);
    hbnf::PartitionMap parts;
    for (const hbnf::Node& nd : bn.nodes())
      if (nd.kind == hbnf::NodeKind::Continuous) {
        const hbnf::Interval& r = ranges.at(nd.id);
        parts[nd.id] = hbnf::uniform_partition(nd.id, r.lo, r.hi, *states);
      }
    compiled = hbnf::compile(bn, parts);
  } else if (!use_dd && model_partitions_complete && !mf.partitions.empty()) {
    compiled = hbnf::compile(bn, mf.partitions);
  } else {
    hbnf::DdConfig config;
    config.ree_threshold = ree_threshold;
    hbnf::DdResult res = hbnf::dynamic_discretize(bn, config);
    compiled = std::move(res.compiled);
    marginals = std::move(res.marginals);
    consistent = res.consistent;
  }

  if (marginals.empty()) {
    hbnf::InferenceResult res = hbnf::run_inference(compiled);
    marginals = std::move(res.marginals);
    consistent = res.consistent;
  }

  if (!consistent) {
    std::cerr << "zero-mass evidence: the observations contradict the model\n";
    return kInconsistent;
  }

  json doc = json::object();
  for (const hbnf::NodeId& id : compiled.var_names) {
    json entry = json::object();
    entry["states"] = compiled.state_labels[static_cast<std::size_t>(compiled.var_of(id))];
    entry["probs"] = marginals.at(id);
    doc[id] = std::move(entry);
  }
  write_text(output, doc.dump(2) + "\n");
  return kOk;
}

int cmd_report(const std::string& input) {
  hbnf::ModelFile mf = load_valid(input);
  hbnf::StructureMetrics sm = hbnf::metrics(mf.network);
  json doc = json::object();
  doc["tree_width"] = sm.tree_width;
  doc["max_potential_size"] = sm.max_potential_size;
  doc["max_cpd_size"] = hbnf::max_cpd_size(mf.network);
  doc["clusters"] = sm.cluster_sizes;
  json parents = json::object();
  for (const hbnf::Node& nd : mf.network.nodes())
    parents[nd.id] = hbnf::continuous_parent_count(mf.network, nd.id);
  doc["continuous_parents"] = std::move(parents);
  std::cout << doc.dump(2) << "\n";
  return kOk;
}

int cmd_gen(const std::string& name, const std::string& output) {
  hbnf::ModelFile mf;
  mf.network = hbnf::make_fixture(name);
  write_text(output, hbnf::serialize_model(mf));
  return kOk;
}

int cmd_bench(const std::string& suite, const std::string& variants_csv,
              double budget_seconds, std::size_t budget_states, bool parallel,
              const std::string& output) {
  if (suite != "fig7") {
    std::cerr << "unknown suite: \"" << suite << "\" (expected fig7)\n";
    return kUsage;
  }
  hbnf::BenchConfig config;
  config.variants.clear();
  std::stringstream ss(variants_csv);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (item.empty()) continue;
    if (item != "bf" && item != "sfbf") {
      std::cerr << "unknown variant: " << item << " (expected bf or sfbf)\n";
      return kUsage;
    }
    config.variants.push_back(item);
  }
  if (config.variants.empty()) {
    std::cerr << "no variants selected\n";
    return kUsage;
  }
  config.dd.budget_seconds = budget_seconds;
  config.dd.budget_entries = budget_states;
  config.parallel = parallel;

  std::vector<hbnf::BenchRow> rows = hbnf::run_bench(config);
  write_text(output, hbnf::bench_csv(rows));
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Hybrid network factorizing toolkit"};
  app.require_subcommand(1);

  // transform
  auto* transform = app.add_subcommand("transform", "Rewrite a model's CPDs");
  std::string t_in, t_out;
  bool t_bf = false, t_sf = false;
  std::string t_sf_mode = "compact";
  transform->add_option("-i,--input", t_in, "Input model file")->required();
  transform->add_option("-o,--output", t_out, "Output model file")->required();
  transform->add_flag("--bf", t_bf, "Split multi-variable expressions");
  transform->add_flag("--sf", t_sf, "Stack wide partitioned CPDs");
  transform->add_option("--sf-mode", t_sf_mode, "Stacking flavor")
      ->check(CLI::IsMember({"compact", "explicit"}));

  // infer
  auto* infer = app.add_subcommand("infer", "Discretize and query marginals");
  std::string i_in, i_out, i_fixed;
  std::vector<std::string> i_evidence;
  bool i_dd = false;
  std::optional<std::size_t> i_states;
  double i_ree = 1e-3;
  infer->add_option("-i,--input", i_in, "Input model file")->required();
  infer->add_option("-o,--output", i_out, "Marginals output file (default stdout)");
  infer->add_option("--evidence", i_evidence, "Observations as id=value");
  auto* states_opt = infer->add_option("--states", i_states, "Fixed uniform state count");
  infer->add_flag("--dd", i_dd, "Dynamic discretization (default)")->excludes(states_opt);
  infer->add_option("--ree", i_ree, "Refinement error threshold");
  infer->add_option("--fixed-partitions", i_fixed, "Partition file overriding the model");

  // report
  auto* report = app.add_subcommand("report", "Print structural metrics");
  std::string r_in;
  report->add_option("-i,--input", r_in, "Input model file")->required();

  // gen
  auto* gen = app.add_subcommand("gen", "Write a bundled reference model");
  std::string g_name, g_out;
  gen->add_option("-n,--name", g_name, "Fixture name")
      ->required()
      ->check(CLI::IsMember(hbnf::fixture_names()));
  gen->add_option("-o,--output", g_out, "Output model file (default stdout)");

  // bench
  auto* bench = app.add_subcommand("bench", "Run the benchmark suite");
  std::string b_suite = "fig7", b_variants = "bf,sfbf", b_out;
  double b_budget_seconds = 120.0;
  std::size_t b_budget_states = 50'000'000;
  bool b_parallel = false;
  bench->add_option("--suite", b_suite, "Benchmark suite name");
  bench->add_option("--variants", b_variants, "Comma list of bf,sfbf");
  bench->add_option("--budget-seconds", b_budget_seconds, "Per-run wall-clock budget");
  bench->add_option("--budget-states", b_budget_states, "Per-run cluster entry budget");
  bench->add_flag("--parallel", b_parallel, "Run cases concurrently");
  bench->add_option("-o,--output", b_out, "CSV output file (default stdout)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? kOk : kUsage;
  }

  try {
    if (transform->parsed())
      return cmd_transform(t_in, t_out, t_bf, t_sf, t_sf_mode);
    if (infer->parsed())
      return cmd_infer(i_in, i_out, i_evidence, i_dd, i_states, i_ree, i_fixed);
    if (report->parsed()) return cmd_report(r_in);
    if (gen->parsed()) return cmd_gen(g_name, g_out);
    if (bench->parsed())
      return cmd_bench(b_suite, b_variants, b_budget_seconds, b_budget_states, b_parallel,
                       b_out);
  } catch (const hbnf::ModelError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kInputError;
  } catch (const hbnf::CompileError& e) {
    std::cerr << "error: node " << e.node << ": " << e.what() << "\n";
    return kInputError;
  } catch (const hbnf::FactorizeError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kInputError;
  } catch (const hbnf::BudgetExceeded& e) {
    std::cerr << "error: budget exceeded (" << e.reason << "): " << e.what() << "\n";
    return kInputError;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kInputError;
  }
  return kUsage;
}
