#include "hbnf/bench.hpp"

#include "hbnf/factorize.hpp"
#include "hbnf/fixtures.hpp"
#include "hbnf/inference.hpp"

#include <chrono>
#include <cstdio>
#include <future>
#include <string>
#include <utility>
#include <vector>

namespace hbnf {

namespace {

BenchRow run_one(int case_id, const std::string& variant, const DdConfig& dd) {
  BenchRow row;
  row.case_id = case_id;
  row.variant = variant;
  try {
    BayesianNetwork base = make_fixture("fig7_" + std::to_string(case_id));
    BayesianNetwork net;
    if (variant == "bf") {
      net = binary_factorize(base).first;
    } else if (variant == "sfbf") {
      net = sf_bf(base).first;
    } else {
      row.reason = "unknown variant";
      return row;
    }

    StructureMetrics sm = metrics(net);
    row.tree_width = sm.tree_width;
    row.max_potential = sm.max_potential_size;

    auto t0 = std::chrono::steady_clock::now();
    try {
      DdResult res = dynamic_discretize(net, dd);
      row.seconds =
          std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
      if (res.consistent) {
        row.completed = true;
      } else {
        row.reason = "inconsistent";
      }
    } catch (const BudgetExceeded& e) {
      row.seconds =
          std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
      row.reason = e.reason;
    }
  } catch (const std::exception& e) {
    row.reason = e.what();
  }
  return row;
}

}  // namespace

std::vector<BenchRow> run_bench(const BenchConfig& config) {
  std::vector<std::pair<int, std::string>> jobs;
  for (int case_id : config.cases)
    for (const std::string& variant : config.variants) jobs.emplace_back(case_id, variant);

  std::vector<BenchRow> rows(jobs.size());
  if (config.parallel) {
    std::vector<std::future<BenchRow>> futures;
    futures.reserve(jobs.size());
    for (const auto& [case_id, variant] : jobs)
      futures.push_back(std::async(std::launch::async, run_one, case_id, variant,
                                   config.dd));
    for (std::size_t i = 0; i < futures.size(); ++i) rows[i] = futures[i].get();
  } else {
    for (std::size_t i = 0; i < jobs.size(); ++i)
      rows[i] = run_one(jobs[i].first, jobs[i].second, config.dd);
  }
  return rows;
}

std::string bench_csv(const std::vector<BenchRow>& rows) {
  std::string out = "case,variant,tree_width,max_potential,seconds,completed,reason\n";
  for (const BenchRow& row : rows) {
    char seconds[32];
    std::snprintf(seconds, sizeof(seconds), "%.3f", row.seconds);
    out += std::to_string(row.case_id);
    out += ',';
    out += row.variant;
    out += ',';
    out += std::to_string(row.tree_width);
    out += ',';
    out += std::to_string(row.max_potential);
    out += ',';
    out += seconds;
    out += ',';
    out += row.completed ? "true" : "false";
    out += ',';
    out += row.reason;
    out += '\n';
  }
  return out;
}

}  // namespace hbnf
