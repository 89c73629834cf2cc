#pragma once

#include <functional>
#include <memory>
#include <string_view>

#include "noahsim/metrics.hpp"
#include "noahsim/scenario.hpp"
#include "noahsim/scheduler_noah.hpp"
#include "noahsim/workload.hpp"

namespace noahsim {

struct RunOptions {
  // Inject arrivals instead of generating them from the class specs.
  const std::vector<Arrival>* arrivals_override = nullptr;
  // Per-message trace: phase is arrival, dispatch, start or completion
  // (site is -1 for the arrival phase).
  std::function<void(double t, std::string_view cls, int site, std::string_view phase)> trace;
  // Fires after every allocation control step (noah runs only).
  NoahScheduler::ControlObserver noah_observer;
  uint64_t livelock_limit = 10'000'000;
};

struct RunResult {
  RunMetrics metrics;
  RunSummary summary;
  double final_time = 0;
  uint64_t trace_digest = 0;
  uint64_t engine_events = 0;
  // audit sums for work-conservation checks
  double busy_time_total = 0;
  double integrated_work = 0;
};

// One deterministic single-threaded run of a scenario: generates (or takes)
// the arrivals, drives them through the configured scheduler and cluster
// until every message has been processed, and summarizes the outcome.
RunResult run_simulation(const Scenario& sc, const RunOptions& opts = {});

}  // namespace noahsim
