#pragma once

#include <functional>
#include <vector>

#include "noahsim/estimators.hpp"
#include "noahsim/scheduler.hpp"

namespace noahsim {

// Virtual allocation matrix c^i_k with per-site capacity c^i. Allocations are
// budgets, not containers: changing them never spawns or kills an instance.
class AllocationTable {
 public:
  AllocationTable(int sites, int classes, int site_cap);

  int alloc(int site, int cls) const { return c_[static_cast<size_t>(site)][static_cast<size_t>(cls)]; }
  int target(int cls) const { return target_[static_cast<size_t>(cls)]; }
  int site_cap(int site) const { (void)site; return site_cap_; }
  int site_total(int site) const;
  int site_free(int site) const { return site_cap_ - site_total(site); }
  int total_free() const;
  int class_total(int cls) const;
  int sites() const { return static_cast<int>(c_.size()); }
  int classes() const { return static_cast<int>(target_.size()); }

  // Placement rules. scale_out fills sites already holding the class (largest
  // holding first), then opens the unused site with the most free capacity;
  // scale_in repeatedly reduces the smallest positive holding (tie: highest
  // site id). Returns the unplaced remainder (0 when capacity sufficed).
  int scale_out(int cls, int delta);
  void scale_in(int cls, int delta);
  void set_target(int cls, int t) { target_[static_cast<size_t>(cls)] = t; }

 private:
  std::vector<std::vector<int>> c_;  // [site][class]
  std::vector<int> target_;
  int site_cap_;
};

struct NoahControlStep {
  int cls = -1;
  int old_target = 0;
  int new_target = 0;
  bool saturated = false;
  int containers_before = 0;
  int containers_after = 0;
};

// Per-class Erlang-C allocation control, colocating placement, ratio-based
// dispatch and queue-vs-spawn execution policy.
class NoahScheduler : public SchedulerBase, public SitePolicy {
 public:
  using ControlObserver = std::function<void(const NoahControlStep&, const AllocationTable&)>;

  NoahScheduler(const Scenario& sc, Cluster& cl, EstimatorBank& est, Engine& eng,
                RunMetrics& metrics);

  // SchedulerBase
  int dispatch(int event_id, int cls) override;
  SitePolicy& policy() override { return *this; }

  // SitePolicy
  AdmitOutcome on_arrival(int site, int event_id, int cls) override;
  void reevaluate(int site) override;

  // control loop
  void start_control_timer();
  void control_tick();  // all classes, round-robin by id
  void control_step(int cls);

  bool can_start_queued(int site) const;
  double estimated_queue_wait(int site, int cls) const;

  const AllocationTable& table() const { return table_; }
  void set_observer(ControlObserver obs) { observer_ = std::move(obs); }

  static constexpr uint64_t kControlTimer = 1;  // engine timer payload a

 private:
  bool try_spawn(int site, int cls);

  const Scenario& sc_;
  Cluster& cl_;
  EstimatorBank& est_;
  Engine& eng_;
  RunMetrics& metrics_;
  AllocationTable table_;
  ControlObserver observer_;
  int max_active_;
};

}  // namespace noahsim
