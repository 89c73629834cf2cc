#pragma once

#include <deque>
#include <functional>
#include <optional>
#include <vector>

#include "noahsim/engine.hpp"
#include "noahsim/metrics.hpp"
#include "noahsim/rng.hpp"
#include "noahsim/scenario.hpp"

namespace noahsim {

enum class InstanceState : uint8_t { cold_starting, initializing, warm_idle, active };
enum class Warmth : uint8_t { cold, prewarmed };

struct ContainerInstance {
  int id = -1;
  int site = -1;
  int cls = -1;
  InstanceState state = InstanceState::cold_starting;
  double created_at = 0;
  double setup_ready_at = -1;
  double last_active_end = -1;
  double busy_time_total = 0;   // integrated wall time in state active
  double remaining_work = 0;    // ideal single-core seconds; > 0 iff computing
  int serving_event = -1;
  double exec_started_at = -1;
  int data_op_index = -1;       // >= 0 while in the data-access phase
  int transfer_src_site = -1;   // occupancy being held at a source site
  int transfer_item = -1;
  int transfer_replica = -1;
  bool transfer_installs = false;
  double idle_since = -1;
  uint64_t idle_epoch = 0;
  bool alive = true;
  bool ever_active = false;
};

struct QueuedEvent {
  int event_id = -1;
  int cls = -1;
  double enqueued_at = 0;
};

struct ReplicaState {
  int site = 0;
  Tier tier = Tier::disk;
  int readers = 0;
  double last_touch = 0;
  bool present = true;  // memory replicas toggle off on cache eviction
};

struct DataItemState {
  double size = 0;
  std::vector<ReplicaState> replicas;
};

struct Site {
  int id = 0;
  // container pool: resident instance ids (setting up, idle or active)
  std::vector<int> pool;
  std::vector<std::deque<QueuedEvent>> queues;  // per class
  std::vector<int> active_by_class;
  std::vector<int> idle_by_class;
  std::vector<int> spawning_by_class;
  std::vector<int> instances_by_class;
  int total_active = 0;    // events currently executing here
  int total_spawning = 0;
  int prewarm_stock = 0;
  // processor sharing
  std::vector<int> active_list;  // instances in state active
  std::vector<int> computing;    // subset currently progressing work
  int extra_occupancy = 0;       // transfer endpoints sharing the processor
  double last_integrate = 0;
  uint64_t progress_epoch = 0;
  double integrated_work = 0;    // Σ rate·dt over computing instances (audit)
  // memory
  double mem_used = 0;
  bool employed = false;
};

// Sites, processor-sharing execution, container lifecycle and named-data
// replication. Queue-vs-spawn policy lives with the schedulers; this class
// provides the primitives they drive and owns all mechanical state updates.
class Cluster {
 public:
  // Freed or freshly set-up instances go idle; queued work is picked back up
  // by the site policy from the on_site_change hook, so cross-class service
  // order stays with the scheduler.
  struct Hooks {
    std::function<void(int event_id, int site)> on_event_start;
    std::function<void(int event_id, int site, double start, double end)> on_event_complete;
    std::function<void(int site, int cls, double setup_duration)> on_setup_done;
    std::function<void(int site)> on_site_change;  // policy re-evaluation point
  };

  Cluster(const Scenario& sc, Engine& eng, RunMetrics& metrics);

  Hooks hooks;

  // engine event entry points
  void handle_exec_progress(const SimEvent& ev);
  void handle_setup_done(const SimEvent& ev);
  void handle_transfer_done(const SimEvent& ev);
  void handle_idle_timer(const SimEvent& ev);

  // primitives for dispatch policies
  bool start_on_idle_instance(int site, int event_id, int cls);
  bool serve_queue_head_on_idle(int site, int cls);
  void enqueue(int site, int event_id, int cls);
  bool can_spawn(int site) const;  // has a free slot or an evictable idle
  // Creates a container (evicting the LRU idle instance under pool pressure).
  // Returns the instance id, or nothing when capacity and memory are exhausted.
  std::optional<int> spawn(int site, int cls, Warmth warmth);
  std::optional<int> evict_lru_idle(int site);

  // accessors
  int sites_count() const { return static_cast<int>(sites_.size()); }
  const Site& site(int i) const { return sites_[static_cast<size_t>(i)]; }
  int queue_size(int site, int cls) const;
  double queue_head_time(int site, int cls) const;
  double queue_entry_time(int site, int cls, int index) const;
  int idle_count(int site, int cls) const;
  int active_count(int site, int cls) const;
  int total_active(int site) const;
  int spawning_count(int site, int cls) const;
  int instance_count(int site, int cls) const;
  int pool_size(int site) const;
  int total_instances_alive() const;
  const ContainerInstance& instance(int id) const { return instances_[static_cast<size_t>(id)]; }

  // audits
  double total_busy_time() const;        // Σ busy over all containers ever
  double total_integrated_work() const;  // Σ rate·dt over computing instances
  bool quiescent() const;                // no queued events, no active instances

  // run end: close out surviving containers
  void finalize_records();

  // direct access latency calculation (exposed for tests)
  struct AccessPlan {
    double latency = 0;
    int source_site = -1;       // occupancy endpoint; -1 = none
    int replica_index = -1;
    bool install_local = false;
  };
  AccessPlan plan_access(int site, int item_id, bool write) const;

 private:
  double now() const { return eng_.now(); }
  Site& s(int i) { return sites_[static_cast<size_t>(i)]; }
  ContainerInstance& inst(int id) { return instances_[static_cast<size_t>(id)]; }

  int occupancy(const Site& st) const;
  double share_rate(const Site& st) const;
  void integrate(Site& st);
  void reschedule(Site& st);
  void add_occupancy(int site_id, int delta);

  void begin_execution(int instance_id, int event_id);
  void begin_compute(int instance_id);
  void start_data_op(int instance_id);
  void complete_event(int instance_id);
  void to_idle(int instance_id);
  void evict(int instance_id);
  void finalize_record(const ContainerInstance& ci, double life_end);
  void install_memory_replica(int site_id, int item_id);
  double service_sample(int cls);
  void remove_from(std::vector<int>& v, int id);

  const Scenario& sc_;
  Engine& eng_;
  RunMetrics& metrics_;
  std::vector<Site> sites_;
  std::vector<ContainerInstance> instances_;
  std::vector<DataItemState> items_;
  std::vector<RandomStream> service_streams_;
  std::vector<std::vector<char>> code_seen_;  // [site][cls] first-spawn transfer paid
  int alive_instances_ = 0;
};

}  // namespace noahsim
