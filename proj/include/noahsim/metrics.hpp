#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace noahsim {

struct Scenario;

// Per-message timestamps, filled in as the event moves through the system.
struct EventRecord {
  int cls = -1;
  int site = -1;
  double arrival = -1;
  double dispatch = -1;
  double start = -1;
  double completion = -1;
  double ideal_work = 0;  // sampled single-core execution demand
};

// Finalized container lifecycle record (at eviction or run end).
struct ContainerRecord {
  int site = -1;
  int cls = -1;
  double created_at = 0;
  double setup_ready_at = 0;
  double last_active_end = 0;  // creation+setup end if it never ran anything
  double busy_time = 0;
  bool ever_active = false;
};

struct RunMetrics {
  std::vector<EventRecord> events;
  std::vector<ContainerRecord> containers;
  long containers_created = 0;  // the cold-start count: every container begun
  std::vector<char> employed;   // per site: processed at least one event
  long completions = 0;
  bool saturated = false;             // noah allocation targets hit cluster capacity
  bool equilibrium_converged = true;  // noncoop best-reply rounds converged

  int hosts_employed() const {
    int n = 0;
    for (char e : employed) n += (e != 0);
    return n;
  }
};

// Busy time over lifetime, summed across records; lifetime is truncated at
// the last processed message. Containers that never processed anything count
// their setup duration with zero busy time. Empty input has no defined value.
std::optional<double> container_utilization(const std::vector<ContainerRecord>& recs);

struct RunSummary {
  double lambda = 0;
  std::string scheduler;
  uint64_t seed = 0;
  std::string status = "ok";
  long total_events = 0;
  long completions = 0;
  long cold_starts = 0;
  int hosts_employed = 0;
  double mean_response = 0;
  double p50_response = 0;
  double p95_response = 0;
  double p99_response = 0;
  double mean_wait = 0;  // arrival -> execution start
  double mean_exec = 0;  // execution start -> completion
  std::optional<double> utilization;
  double final_time = 0;
  uint64_t trace_digest = 0;
  std::string flags;  // "saturated", "nc-nonconverged", ...
  std::string error;

  static std::string csv_header();
  std::string csv_row() const;
  std::string pretty() const;
};

RunSummary summarize(const Scenario& sc, const std::string& scheduler_label,
                     const RunMetrics& m, double final_time, uint64_t digest);

std::string csv_quote(const std::string& field);

}  // namespace noahsim
