#pragma once

#include "hbnf/discretize.hpp"

#include <string>
#include <vector>

namespace hbnf {

struct BenchConfig {
  std::vector<int> cases = {1, 2, 3, 4, 5, 6};
  std::vector<std::string> variants = {"bf", "sfbf"};
  DdConfig dd;
  bool parallel = false;

  BenchConfig() {
    dd.budget_seconds = 120.0;
    dd.budget_entries = 50'000'000;
  }
};

struct BenchRow {
  int case_id = 0;
  std::string variant;
  int tree_width = 0;       // structural, filled even when the run fails
  int max_potential = 0;
  double seconds = 0.0;
  bool completed = false;
  std::string reason;       // empty | "time" | "memory" | error text
};

/// Runs inference-under-discretization on the benchmark family, one row per
/// (case, variant). Rows come back in config order regardless of parallelism.
std::vector<BenchRow> run_bench(const BenchConfig& config);

std::string bench_csv(const std::vector<BenchRow>& rows);

}  // namespace hbnf
