#pragma once

#include <ostream>
#include <string>
#include <vector>

#include "noahsim/scenario.hpp"
#include "noahsim/simulation.hpp"

namespace noahsim {

struct SweepSpec {
  Scenario base;
  std::vector<double> lambdas;       // peak rate applied to every class
  std::vector<std::string> schedulers;  // labels: ow, noncoop, noah:10ms, ...
  std::vector<uint64_t> seeds;
  int parallel = 1;
};

struct SweepResult {
  std::vector<RunSummary> rows;  // sorted by (lambda, scheduler order, seed)
  bool all_ok = true;
};

// Runs the full (lambda, scheduler, seed) grid. Rows are appended to csv_path
// as they finish (crash-safe, any order) and the file is rewritten sorted
// once the grid completes. A failed point contributes an error row and the
// sweep continues. Grid points are independent and may run concurrently.
SweepResult run_sweep(const SweepSpec& spec, const std::string& csv_path,
                      std::ostream* progress = nullptr);

// "1:80" (inclusive range), "1:80:5" (stride) or "10,30,50".
std::vector<double> parse_lambda_grid(const std::string& text);

}  // namespace noahsim
