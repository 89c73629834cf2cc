#include "noahsim/scheduler.hpp"

#include <limits>

namespace noahsim {

int WhiskSitePolicy::busy(int site) const {
  return cl_.total_active(site) + cl_.site(site).total_spawning;
}

AdmitOutcome WhiskSitePolicy::on_arrival(int site, int event_id, int cls) {
  if (busy(site) < slots_ && cl_.queue_size(site, cls) == 0 &&
      cl_.start_on_idle_instance(site, event_id, cls)) {
    return AdmitOutcome::started;
  }
  cl_.enqueue(site, event_id, cls);
  feed(site);
  return AdmitOutcome::queued;
}

void WhiskSitePolicy::feed(int site) {
  const int classes = static_cast<int>(cl_.site(site).queues.size());
  while (busy(site) < slots_) {
    // a freed warm instance takes the oldest buffered event of its class,
    // even one whose cold container is still warming (that container will
    // serve the next entry or end up a warm spare)
    int cls = -1;
    double head = std::numeric_limits<double>::infinity();
    for (int k = 0; k < classes; ++k) {
      if (cl_.idle_count(site, k) == 0 || cl_.queue_size(site, k) == 0) continue;
      double t = cl_.queue_head_time(site, k);
      if (t < head) {
        head = t;
        cls = k;
      }
    }
    if (cls >= 0) {
      if (!cl_.serve_queue_head_on_idle(site, cls)) break;
      continue;
    }
    // otherwise start a container for the oldest event with none underway
    head = std::numeric_limits<double>::infinity();
    for (int k = 0; k < classes; ++k) {
      int assigned = cl_.spawning_count(site, k);
      if (cl_.queue_size(site, k) <= assigned) continue;
      double t = cl_.queue_entry_time(site, k, assigned);
      if (t < head) {
        head = t;
        cls = k;
      }
    }
    if (cls < 0) break;
    if (!cl_.spawn(site, cls, cl_.site(site).prewarm_stock > 0 ? Warmth::prewarmed
                                                               : Warmth::cold)) {
      break;  // no spawnable capacity left: wait for a container to free
    }
  }
}

}  // namespace noahsim
