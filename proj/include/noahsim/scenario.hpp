#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "noahsim/hash.hpp"

namespace noahsim {

// Scenario problems (bad file, unknown key, malformed value). The CLI maps
// these to exit code 2 with the offending line and field.
struct ScenarioError : std::runtime_error {
  ScenarioError(const std::string& msg, int line_no = 0, std::string fld = "")
      : std::runtime_error(msg), line(line_no), field(std::move(fld)) {}
  int line;
  std::string field;
};

enum class Tier : uint8_t { disk, memory };

struct ClusterConfig {
  int hosts = 10;
  int cores = 16;
  double mem_capacity = 1e12;   // bytes; "sufficient" by default
  double disk_speed = 711e6;    // bytes/s
  double net_speed = 1135e6;    // bytes/s
  double mem_speed = 12.8e9;    // bytes/s
  int container_cap = 32;
  // Busy limit of the load-balancer invokers (ow, noncoop): containers
  // executing or cold-starting in parallel. Events beyond it buffer at the
  // site. 0 resolves to the core count; large values give pure processor
  // sharing.
  int exec_slots = 0;
  double holding_time = 300.0;  // idle container lifetime, seconds
  double setup_cold = 0.5;      // seconds
  double setup_prewarm = 0.05;  // seconds
  int prewarm_pool = 0;         // stem containers per site at t=0
  // Container setup occupies a processor share for its duration, so heavy
  // churn erodes execution capacity.
  bool setup_consumes_core = true;
  double instance_footprint = 0;  // bytes of memory per container
  double code_size = 0;  // bytes transferred on the first spawn of a class per site
};

enum class ExecDist : uint8_t { deterministic, exponential };

struct DataOpSpec {
  bool write = false;
  std::string item;
  int item_id = -1;  // resolved by finalize()
};

struct ClassConfig {
  std::string name;
  double exec_time = 0.2;  // ideal single-core execution, seconds
  ExecDist exec_dist = ExecDist::deterministic;
  int threads = 1;  // only single-threaded functions are modeled
  double ramp = 20.0;      // seconds from zero to peak
  double peak_rate = 50.0;  // Λ, arrivals/s at ramp end
  bool stop_after_ramp = true;
  double steady_duration = 0;  // extra seconds at Λ when not stopping
  std::vector<DataOpSpec> data_ops;
};

struct ReplicaConfig {
  int site = 0;
  Tier tier = Tier::disk;
};

struct DataItemConfig {
  std::string name;
  double size = 0;  // bytes
  std::vector<ReplicaConfig> replicas;
};

enum class SchedulerKind : uint8_t { ow, noncoop, noah };

struct SchedulerConfig {
  SchedulerKind kind = SchedulerKind::ow;
  // ow
  int busy_threshold = 16;
  // noncoop
  double nc_epsilon = 1e-6;
  int nc_round_cap = 200;
  double nc_recompute_period = 1.0;   // seconds
  double nc_recompute_rel = 0.10;     // λ̂ relative change that forces a recompute
  // noah
  double alpha = 0.010;        // waiting-time threshold, seconds
  double control_period = 0.1;  // seconds
  int c_min = 0;
  int spawn_slack = 2;
};

struct EstimatorConfig {
  double lambda_halflife = 2.0;   // seconds
  double sample_halflife = 10.0;  // samples, for μ̂ and setup estimates
  double mu_prior = 0;            // 0 = derive from each class's exec_time
  double setup_prior = -1;        // <0 = derive from cluster setup_cold
};

// Workload template used when no explicit [class ...] sections are given.
struct WorkloadTemplate {
  int count = 10;
  std::string name_prefix = "fn_";
  ClassConfig base;
};

struct Scenario {
  ClusterConfig cluster;
  SchedulerConfig scheduler;
  EstimatorConfig estimators;
  WorkloadTemplate workload;
  std::vector<ClassConfig> classes;  // finalized list (template-expanded)
  std::vector<DataItemConfig> data;
  uint64_t seed = 1;
  bool emit_trace = false;
  std::string arrivals_file;

  static Scenario load_file(const std::string& path);
  static Scenario parse(std::string_view text, const std::string& origin = "<string>");

  // Expands the workload template into classes (when none are explicit),
  // resolves data op references and checks cross-field consistency.
  void finalize();

  // Canonical text form; parse(serialize()) round-trips to an identical
  // effective configuration.
  std::string serialize() const;
  uint64_t hash() const { return fnv1a64(serialize()); }

  int class_index(std::string_view name) const;
  double mean_peak_rate() const;
  double mu_prior_for(const ClassConfig& c) const;
  double setup_prior_value() const;
};

// One scenario field per CLI flag; `spec` is "section.key=value" (or
// "class.<name>.key=value" / "data.<name>.key=value").
void apply_override(Scenario& s, const std::string& spec);

// Parsers for suffixed values used across file, flags and labels.
double parse_duration(std::string_view text);  // "500 ms", "10 us", "5 min", "0.5 s"
double parse_size(std::string_view text);      // "11.35 MB", "1 GB", "64 B"
double parse_rate(std::string_view text);      // "50 /s", "711 MB/s", plain = /s
std::string format_duration_compact(double seconds);  // 0.01 -> "10ms"

// Scheduler grid labels: "ow", "noncoop", "noah", "noah:10ms".
SchedulerConfig parse_scheduler_label(std::string_view label,
                                      const SchedulerConfig& base);
std::string scheduler_label(const SchedulerConfig& cfg);

}  // namespace noahsim
