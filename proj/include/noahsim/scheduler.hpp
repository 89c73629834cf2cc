#pragma once

#include "noahsim/cluster.hpp"

namespace noahsim {

enum class AdmitOutcome : uint8_t { started, queued };

// Per-site queue-vs-spawn policy, driven at event arrival and whenever a
// site's state changes (completion, setup finished, eviction).
class SitePolicy {
 public:
  virtual ~SitePolicy() = default;
  virtual AdmitOutcome on_arrival(int site, int event_id, int cls) = 0;
  virtual void reevaluate(int site) = 0;
};

class SchedulerBase {
 public:
  virtual ~SchedulerBase() = default;
  virtual int dispatch(int event_id, int cls) = 0;
  virtual void on_dispatched(int /*site*/, int /*cls*/) {}
  virtual void on_completed(int /*site*/, int /*cls*/) {}
  virtual SitePolicy& policy() = 0;
};

// Invoker behavior of the load-balancing controllers (ow, noncoop). The
// busy limit (exec_slots) covers containers executing or cold-starting in
// parallel; container setup therefore eats execution capacity. Events beyond
// the limit buffer in arrival order; each freed slot goes to the oldest
// waiting event, reusing a warm idle instance or cold-starting one (evicting
// the LRU idle container under pool pressure).
class WhiskSitePolicy : public SitePolicy {
 public:
  WhiskSitePolicy(const Scenario& sc, Cluster& cl)
      : cl_(cl), slots_(sc.cluster.exec_slots) {}

  AdmitOutcome on_arrival(int site, int event_id, int cls) override;
  void reevaluate(int site) override { feed(site); }

  int busy(int site) const;

 private:
  void feed(int site);
  Cluster& cl_;
  int slots_;
};

}  // namespace noahsim
