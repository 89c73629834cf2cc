#include "noahsim/scheduler_noah.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace noahsim {

AllocationTable::AllocationTable(int sites, int classes, int site_cap)
    : c_(static_cast<size_t>(sites), std::vector<int>(static_cast<size_t>(classes), 0)),
      target_(static_cast<size_t>(classes), 0),
      site_cap_(site_cap) {}

int AllocationTable::site_total(int site) const {
  int sum = 0;
  for (int v : c_[static_cast<size_t>(site)]) sum += v;
  return sum;
}

int AllocationTable::total_free() const {
  int sum = 0;
  for (int i = 0; i < sites(); ++i) sum += site_free(i);
  return sum;
}

int AllocationTable::class_total(int cls) const {
  int sum = 0;
  for (const auto& row : c_) sum += row[static_cast<size_t>(cls)];
  return sum;
}

int AllocationTable::scale_out(int cls, int delta) {
  // holders first, in descending holding order (tie: lowest id)
  std::vector<int> holders;
  for (int i = 0; i < sites(); ++i) {
    if (alloc(i, cls) > 0) holders.push_back(i);
  }
  std::sort(holders.begin(), holders.end(), [&](int a, int b) {
    if (alloc(a, cls) != alloc(b, cls)) return alloc(a, cls) > alloc(b, cls);
    return a < b;
  });
  for (int i : holders) {
    if (delta == 0) break;
    int take = std::min(delta, site_free(i));
    c_[static_cast<size_t>(i)][static_cast<size_t>(cls)] += take;
    delta -= take;
  }
  // then open as few new sites as possible: most free capacity first
  while (delta > 0) {
    int pick = -1;
    for (int i = 0; i < sites(); ++i) {
      if (alloc(i, cls) > 0 || site_free(i) <= 0) continue;
      if (pick < 0 || site_free(i) > site_free(pick)) pick = i;
    }
    if (pick < 0) break;
    int take = std::min(delta, site_free(pick));
    c_[static_cast<size_t>(pick)][static_cast<size_t>(cls)] += take;
    delta -= take;
  }
  return delta;
}

void AllocationTable::scale_in(int cls, int delta) {
  while (delta > 0) {
    int pick = -1;
    for (int i = 0; i < sites(); ++i) {
      int v = alloc(i, cls);
      if (v <= 0) continue;
      if (pick < 0 || v < alloc(pick, cls) ||
          (v == alloc(pick, cls) && i > pick)) {
        pick = i;
      }
    }
    if (pick < 0) break;
    c_[static_cast<size_t>(pick)][static_cast<size_t>(cls)] -= 1;
    delta -= 1;
  }
}

NoahScheduler::NoahScheduler(const Scenario& sc, Cluster& cl, EstimatorBank& est,
                             Engine& eng, RunMetrics& metrics)
    : sc_(sc),
      cl_(cl),
      est_(est),
      eng_(eng),
      metrics_(metrics),
      table_(sc.cluster.hosts, static_cast<int>(sc.classes.size()), sc.cluster.cores),
      max_active_(sc.cluster.cores) {}

void NoahScheduler::start_control_timer() {
  eng_.schedule(eng_.now() + sc_.scheduler.control_period, EventKind::timer,
                kControlTimer);
}

void NoahScheduler::control_tick() {
  for (int k = 0; k < table_.classes(); ++k) control_step(k);
  start_control_timer();
}

void NoahScheduler::control_step(int cls) {
  NoahControlStep step;
  step.cls = cls;
  step.old_target = table_.target(cls);
  step.containers_before = cl_.total_instances_alive();

  double lambda = est_.lambda_hat(cls, eng_.now());
  int target;
  if (lambda <= 0) {
    target = sc_.scheduler.c_min;
  } else {
    target = queueing::min_instances(lambda, est_.mu_hat(cls), sc_.scheduler.alpha,
                                     sc_.scheduler.c_min);
  }
  if (target > step.old_target) {
    int grow = std::min(target - step.old_target, table_.total_free());
    if (grow < target - step.old_target) {
      step.saturated = true;
      metrics_.saturated = true;
    }
    target = step.old_target + grow;
    if (grow > 0) {
      int shortfall = table_.scale_out(cls, grow);
      if (shortfall > 0) {
        // capacity changed underneath us; keep the table consistent
        target -= shortfall;
        step.saturated = true;
        metrics_.saturated = true;
      }
    }
  } else if (target < step.old_target) {
    table_.scale_in(cls, step.old_target - target);
  }
  table_.set_target(cls, target);
  step.new_target = target;
  step.containers_after = cl_.total_instances_alive();
  if (observer_) observer_(step, table_);
}

int NoahScheduler::dispatch(int event_id, int cls) {
  (void)event_id;
  if (table_.target(cls) == 0) {
    // cold class: one observed arrival seeds the rate at 1/control_period
    if (!est_.cls(cls).lambda_estimable()) {
      est_.cls(cls).seed_lambda(1.0 / sc_.scheduler.control_period);
    }
    control_step(cls);
  }
  // idling instances win: most idle capacity first (tie: lowest id)
  int best = -1;
  for (int i = 0; i < cl_.sites_count(); ++i) {
    int idle = cl_.idle_count(i, cls);
    if (idle > 0 && (best < 0 || idle > cl_.idle_count(best, cls))) best = i;
  }
  if (best >= 0) return best;
  // lowest ratio of active instances over allocations
  double best_ratio = std::numeric_limits<double>::infinity();
  for (int i = 0; i < cl_.sites_count(); ++i) {
    int alloc = table_.alloc(i, cls);
    if (alloc <= 0) continue;
    double ratio = static_cast<double>(cl_.active_count(i, cls)) / alloc;
    if (ratio < best_ratio) {
      best_ratio = ratio;
      best = i;
    }
  }
  if (best >= 0) return best;
  // saturated cluster left the class without allocations: least loaded site
  for (int i = 0; i < cl_.sites_count(); ++i) {
    if (best < 0 || cl_.total_active(i) < cl_.total_active(best)) best = i;
  }
  return best;
}

bool NoahScheduler::can_start_queued(int site) const {
  return cl_.total_active(site) < max_active_;
}

double NoahScheduler::estimated_queue_wait(int site, int cls) const {
  int active = cl_.active_count(site, cls);
  int n = active + cl_.spawning_count(site, cls);
  if (n == 0) return std::numeric_limits<double>::infinity();
  double svc = 1.0 / est_.mu_hat(cls);
  double backlog = cl_.queue_size(site, cls) * svc + active * 0.5 * svc;
  return backlog / n;
}

bool NoahScheduler::try_spawn(int site, int cls) {
  int bound = table_.alloc(site, cls) + sc_.scheduler.spawn_slack;
  // a queued class with no instance anywhere on the site must be able to
  // make progress even with zero allocation and zero slack
  if (bound == 0 && cl_.instance_count(site, cls) == 0 &&
      cl_.queue_size(site, cls) > 0) {
    bound = 1;
  }
  if (cl_.instance_count(site, cls) >= bound) return false;
  Warmth w = cl_.site(site).prewarm_stock > 0 ? Warmth::prewarmed : Warmth::cold;
  return cl_.spawn(site, cls, w).has_value();
}

AdmitOutcome NoahScheduler::on_arrival(int site, int event_id, int cls) {
  if (cl_.queue_size(site, cls) == 0 && cl_.idle_count(site, cls) > 0 &&
      can_start_queued(site) && cl_.start_on_idle_instance(site, event_id, cls)) {
    return AdmitOutcome::started;
  }
  if (cl_.total_active(site) >= max_active_) {
    cl_.enqueue(site, event_id, cls);
    return AdmitOutcome::queued;
  }
  double est = estimated_queue_wait(site, cls);
  cl_.enqueue(site, event_id, cls);
  if (est > est_.setup_hat(site, cls)) try_spawn(site, cls);
  return AdmitOutcome::queued;
}

void NoahScheduler::reevaluate(int site) {
  const int classes = table_.classes();
  // idle instances pick up waiting events of their class, oldest first
  while (can_start_queued(site)) {
    int cls = -1;
    double head = std::numeric_limits<double>::infinity();
    for (int k = 0; k < classes; ++k) {
      if (cl_.idle_count(site, k) == 0) continue;
      double t = cl_.queue_head_time(site, k);
      if (t < head) {
        head = t;
        cls = k;
      }
    }
    if (cls < 0) break;
    if (!cl_.serve_queue_head_on_idle(site, cls)) break;
  }
  // reconsider spawning for backlogs whose estimated wait outgrew setup
  if (cl_.total_active(site) < max_active_) {
    for (int k = 0; k < classes; ++k) {
      while (cl_.queue_size(site, k) > cl_.spawning_count(site, k) &&
             estimated_queue_wait(site, k) > est_.setup_hat(site, k)) {
        if (!try_spawn(site, k)) break;
      }
    }
  }
}

}  // namespace noahsim
