#include "noahsim/cluster.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace noahsim {

namespace {
constexpr double kWorkEps = 1e-12;  // remaining work below this counts as done
constexpr uint64_t kIdleTimer = 0;  // timer payload a: idle-eviction deadline
}  // namespace

Cluster::Cluster(const Scenario& sc, Engine& eng, RunMetrics& metrics)
    : sc_(sc), eng_(eng), metrics_(metrics) {
  const int hosts = sc.cluster.hosts;
  const int classes = static_cast<int>(sc.classes.size());
  sites_.resize(static_cast<size_t>(hosts));
  code_seen_.assign(static_cast<size_t>(hosts),
                    std::vector<char>(static_cast<size_t>(classes), 0));
  for (int i = 0; i < hosts; ++i) {
    Site& st = sites_[static_cast<size_t>(i)];
    st.id = i;
    st.queues.resize(static_cast<size_t>(classes));
    st.active_by_class.assign(static_cast<size_t>(classes), 0);
    st.idle_by_class.assign(static_cast<size_t>(classes), 0);
    st.spawning_by_class.assign(static_cast<size_t>(classes), 0);
    st.instances_by_class.assign(static_cast<size_t>(classes), 0);
    st.prewarm_stock = sc.cluster.prewarm_pool;
  }
  for (const auto& c : sc.classes) {
    service_streams_.emplace_back(sc.seed, "service/" + c.name);
  }
  items_.resize(sc.data.size());
  for (size_t i = 0; i < sc.data.size(); ++i) {
    items_[i].size = sc.data[i].size;
    for (const auto& r : sc.data[i].replicas) {
      items_[i].replicas.push_back({r.site, r.tier, 0, 0.0, true});
      if (r.tier == Tier::memory) {
        sites_[static_cast<size_t>(r.site)].mem_used += sc.data[i].size;
      }
    }
  }
  for (const auto& st : sites_) {
    if (st.mem_used > sc.cluster.mem_capacity) {
      throw ScenarioError("initial memory replicas exceed mem_capacity on site " +
                          std::to_string(st.id));
    }
  }
  metrics_.employed.assign(static_cast<size_t>(hosts), 0);
}

int Cluster::occupancy(const Site& st) const {
  int occ = st.total_active + st.extra_occupancy;
  if (sc_.cluster.setup_consumes_core) occ += st.total_spawning;
  return occ;
}

double Cluster::share_rate(const Site& st) const {
  int occ = occupancy(st);
  if (occ <= sc_.cluster.cores) return 1.0;
  return static_cast<double>(sc_.cluster.cores) / static_cast<double>(occ);
}

void Cluster::integrate(Site& st) {
  double dt = now() - st.last_integrate;
  if (dt > 0) {
    if (!st.computing.empty()) {
      double r = share_rate(st);
      for (int id : st.computing) {
        ContainerInstance& ci = inst(id);
        ci.remaining_work = std::max(0.0, ci.remaining_work - dt * r);
      }
      st.integrated_work += dt * r * static_cast<double>(st.computing.size());
    }
    for (int id : st.active_list) inst(id).busy_time_total += dt;
  }
  st.last_integrate = now();
}

void Cluster::reschedule(Site& st) {
  ++st.progress_epoch;
  if (st.computing.empty()) return;
  double mn = std::numeric_limits<double>::infinity();
  for (int id : st.computing) mn = std::min(mn, inst(id).remaining_work);
  double t = now() + mn / share_rate(st);
  eng_.schedule(t, EventKind::exec_progress, static_cast<uint64_t>(st.id),
                st.progress_epoch);
}

void Cluster::add_occupancy(int site_id, int delta) {
  Site& st = s(site_id);
  integrate(st);
  st.extra_occupancy += delta;
  reschedule(st);
}

void Cluster::remove_from(std::vector<int>& v, int id) {
  auto it = std::find(v.begin(), v.end(), id);
  if (it != v.end()) v.erase(it);
}

double Cluster::service_sample(int cls) {
  const ClassConfig& c = sc_.classes[static_cast<size_t>(cls)];
  if (c.exec_dist == ExecDist::deterministic) return c.exec_time;
  return service_streams_[static_cast<size_t>(cls)].exponential(1.0 / c.exec_time);
}

void Cluster::begin_execution(int instance_id, int event_id) {
  ContainerInstance& ci = inst(instance_id);
  Site& st = s(ci.site);
  integrate(st);
  ci.state = InstanceState::active;
  ci.ever_active = true;
  ci.serving_event = event_id;
  ci.exec_started_at = now();
  st.total_active += 1;
  st.active_by_class[static_cast<size_t>(ci.cls)] += 1;
  st.active_list.push_back(instance_id);
  st.employed = true;
  metrics_.employed[static_cast<size_t>(st.id)] = 1;
  EventRecord& rec = metrics_.events[static_cast<size_t>(event_id)];
  rec.start = now();
  rec.site = st.id;
  if (hooks.on_event_start) hooks.on_event_start(event_id, st.id);
  const ClassConfig& c = sc_.classes[static_cast<size_t>(ci.cls)];
  if (!c.data_ops.empty()) {
    ci.data_op_index = 0;
    start_data_op(instance_id);
  } else {
    begin_compute(instance_id);
  }
  reschedule(st);
}

void Cluster::begin_compute(int instance_id) {
  ContainerInstance& ci = inst(instance_id);
  double work = service_sample(ci.cls);
  ci.remaining_work = work;
  metrics_.events[static_cast<size_t>(ci.serving_event)].ideal_work = work;
  s(ci.site).computing.push_back(instance_id);
}

Cluster::AccessPlan Cluster::plan_access(int site, int item_id, bool write) const {
  const DataItemState& item = items_[static_cast<size_t>(item_id)];
  AccessPlan p;
  if (write) {
    p.latency = item.size / sc_.cluster.mem_speed;
    p.install_local = true;
    return p;
  }
  for (size_t i = 0; i < item.replicas.size(); ++i) {
    const ReplicaState& r = item.replicas[i];
    if (r.present && r.site == site && r.tier == Tier::memory) {
      p.latency = item.size / sc_.cluster.mem_speed;
      p.replica_index = static_cast<int>(i);
      return p;
    }
  }
  int best = -1;
  for (size_t i = 0; i < item.replicas.size(); ++i) {
    const ReplicaState& r = item.replicas[i];
    if (!r.present) continue;
    if (best < 0) {
      best = static_cast<int>(i);
      continue;
    }
    const ReplicaState& b = item.replicas[static_cast<size_t>(best)];
    if (r.readers != b.readers) {
      if (r.readers < b.readers) best = static_cast<int>(i);
    } else if (r.tier != b.tier) {
      if (r.tier == Tier::memory) best = static_cast<int>(i);
    } else if (r.site < b.site) {
      best = static_cast<int>(i);
    }
  }
  if (best < 0) throw SimAbort("read of data item with no replica present");
  const ReplicaState& src = item.replicas[static_cast<size_t>(best)];
  double tier_speed = src.tier == Tier::disk ? sc_.cluster.disk_speed : sc_.cluster.mem_speed;
  double speed = std::min({tier_speed, sc_.cluster.net_speed, sc_.cluster.mem_speed});
  p.latency = item.size / speed;
  p.source_site = src.site;
  p.replica_index = best;
  p.install_local = true;
  return p;
}

void Cluster::start_data_op(int instance_id) {
  ContainerInstance& ci = inst(instance_id);
  const ClassConfig& c = sc_.classes[static_cast<size_t>(ci.cls)];
  const DataOpSpec& op = c.data_ops[static_cast<size_t>(ci.data_op_index)];
  AccessPlan plan = plan_access(ci.site, op.item_id, op.write);
  ci.transfer_item = op.item_id;
  ci.transfer_replica = plan.replica_index;
  ci.transfer_src_site = plan.source_site;
  ci.transfer_installs = plan.install_local;
  if (plan.replica_index >= 0) {
    items_[static_cast<size_t>(op.item_id)]
        .replicas[static_cast<size_t>(plan.replica_index)].readers += 1;
  }
  if (plan.source_site >= 0) add_occupancy(plan.source_site, +1);
  eng_.schedule(now() + plan.latency, EventKind::transfer_done,
                static_cast<uint64_t>(ci.site), static_cast<uint64_t>(instance_id));
}

void Cluster::install_memory_replica(int site_id, int item_id) {
  DataItemState& item = items_[static_cast<size_t>(item_id)];
  Site& st = s(site_id);
  for (auto& r : item.replicas) {
    if (r.site == site_id && r.tier == Tier::memory) {
      r.last_touch = now();
      if (!r.present) {
        r.present = true;
        st.mem_used += item.size;
      }
      goto housekeeping;
    }
  }
  item.replicas.push_back({site_id, Tier::memory, 0, now(), true});
  st.mem_used += item.size;

housekeeping:
  while (st.mem_used > sc_.cluster.mem_capacity) {
    // LRU among unpinned memory replicas on this site
    ReplicaState* lru = nullptr;
    double lru_size = 0;
    for (size_t ii = 0; ii < items_.size(); ++ii) {
      for (auto& r : items_[ii].replicas) {
        if (!r.present || r.site != site_id || r.tier != Tier::memory) continue;
        if (r.readers > 0) continue;
        if (!lru || r.last_touch < lru->last_touch) {
          lru = &r;
          lru_size = items_[ii].size;
        }
      }
    }
    if (!lru) throw SimAbort("site memory exhausted with all replicas pinned");
    lru->present = false;
    st.mem_used -= lru_size;
  }
}

void Cluster::handle_transfer_done(const SimEvent& ev) {
  int instance_id = static_cast<int>(ev.b);
  ContainerInstance& ci = inst(instance_id);
  if (ci.transfer_src_site >= 0) add_occupancy(ci.transfer_src_site, -1);
  if (ci.transfer_replica >= 0) {
    ReplicaState& r = items_[static_cast<size_t>(ci.transfer_item)]
                          .replicas[static_cast<size_t>(ci.transfer_replica)];
    r.readers -= 1;
    r.last_touch = now();
  }
  if (ci.transfer_installs) install_memory_replica(ci.site, ci.transfer_item);
  ci.transfer_src_site = -1;
  ci.transfer_item = -1;
  ci.transfer_replica = -1;
  ci.transfer_installs = false;
  const ClassConfig& c = sc_.classes[static_cast<size_t>(ci.cls)];
  ci.data_op_index += 1;
  Site& st = s(ci.site);
  if (ci.data_op_index < static_cast<int>(c.data_ops.size())) {
    start_data_op(instance_id);
  } else {
    ci.data_op_index = -1;
    integrate(st);
    begin_compute(instance_id);
    reschedule(st);
  }
}

void Cluster::handle_exec_progress(const SimEvent& ev) {
  Site& st = s(static_cast<int>(ev.a));
  if (ev.b != st.progress_epoch) return;  // superseded schedule
  integrate(st);
  // residues too small to advance the clock by one representable tick must
  // finish now, or the same-time progress event would loop forever
  double tick = std::nextafter(now(), std::numeric_limits<double>::infinity()) - now();
  double work_eps = std::max(kWorkEps, 2.0 * tick * share_rate(st));
  std::vector<int> finished;
  for (int id : st.computing) {
    if (inst(id).remaining_work <= work_eps) finished.push_back(id);
  }
  if (finished.empty()) {
    reschedule(st);
    return;
  }
  std::sort(finished.begin(), finished.end());
  for (int id : finished) remove_from(st.computing, id);
  for (int id : finished) complete_event(id);
  reschedule(st);
  if (hooks.on_site_change) hooks.on_site_change(st.id);
}

void Cluster::complete_event(int instance_id) {
  ContainerInstance& ci = inst(instance_id);
  Site& st = s(ci.site);
  int event_id = ci.serving_event;
  EventRecord& rec = metrics_.events[static_cast<size_t>(event_id)];
  rec.completion = now();
  ci.last_active_end = now();
  ci.serving_event = -1;
  ci.exec_started_at = -1;
  ci.remaining_work = 0;
  st.total_active -= 1;
  st.active_by_class[static_cast<size_t>(ci.cls)] -= 1;
  remove_from(st.active_list, instance_id);
  metrics_.completions += 1;
  if (hooks.on_event_complete) {
    hooks.on_event_complete(event_id, st.id, rec.start, rec.completion);
  }
  to_idle(instance_id);  // the policy re-dispatches queued work right after
}

void Cluster::handle_setup_done(const SimEvent& ev) {
  int instance_id = static_cast<int>(ev.b);
  ContainerInstance& ci = inst(instance_id);
  Site& st = s(ci.site);
  integrate(st);
  st.spawning_by_class[static_cast<size_t>(ci.cls)] -= 1;
  st.total_spawning -= 1;
  ci.setup_ready_at = now();
  double duration = now() - ci.created_at;
  to_idle(instance_id);
  reschedule(st);
  if (hooks.on_setup_done) hooks.on_setup_done(st.id, ci.cls, duration);
  if (hooks.on_site_change) hooks.on_site_change(st.id);
}

void Cluster::to_idle(int instance_id) {
  ContainerInstance& ci = inst(instance_id);
  ci.state = InstanceState::warm_idle;
  ci.idle_since = now();
  ci.idle_epoch += 1;
  s(ci.site).idle_by_class[static_cast<size_t>(ci.cls)] += 1;
  eng_.schedule(now() + sc_.cluster.holding_time, EventKind::timer, kIdleTimer,
                static_cast<uint64_t>(instance_id), ci.idle_epoch);
}

void Cluster::handle_idle_timer(const SimEvent& ev) {
  int instance_id = static_cast<int>(ev.b);
  ContainerInstance& ci = inst(instance_id);
  if (!ci.alive || ci.state != InstanceState::warm_idle || ci.idle_epoch != ev.c) {
    return;  // reused or evicted in the meantime
  }
  int site_id = ci.site;
  evict(instance_id);
  if (hooks.on_site_change) hooks.on_site_change(site_id);
}

bool Cluster::start_on_idle_instance(int site_id, int event_id, int cls) {
  Site& st = s(site_id);
  if (st.idle_by_class[static_cast<size_t>(cls)] <= 0) return false;
  // Reuse the most recently used idle instance; older ones stay eviction
  // candidates.
  int best = -1;
  double best_key = -1;
  for (int id : st.pool) {
    const ContainerInstance& ci = inst(id);
    if (ci.cls != cls || ci.state != InstanceState::warm_idle) continue;
    double key = ci.ever_active ? ci.last_active_end : ci.setup_ready_at;
    if (key > best_key || (key == best_key && id > best)) {
      best = id;
      best_key = key;
    }
  }
  if (best < 0) return false;
  st.idle_by_class[static_cast<size_t>(cls)] -= 1;
  inst(best).idle_epoch += 1;  // cancel the pending idle timer
  begin_execution(best, event_id);
  return true;
}

bool Cluster::serve_queue_head_on_idle(int site_id, int cls) {
  Site& st = s(site_id);
  auto& q = st.queues[static_cast<size_t>(cls)];
  if (q.empty() || st.idle_by_class[static_cast<size_t>(cls)] <= 0) return false;
  QueuedEvent next = q.front();
  q.pop_front();
  return start_on_idle_instance(site_id, next.event_id, cls);
}

void Cluster::enqueue(int site_id, int event_id, int cls) {
  s(site_id).queues[static_cast<size_t>(cls)].push_back({event_id, cls, now()});
}

bool Cluster::can_spawn(int site_id) const {
  const Site& st = site(site_id);
  if (static_cast<int>(st.pool.size()) < sc_.cluster.container_cap) return true;
  for (int id : st.pool) {
    if (instance(id).state == InstanceState::warm_idle) return true;
  }
  return false;
}

std::optional<int> Cluster::evict_lru_idle(int site_id) {
  Site& st = s(site_id);
  int victim = -1;
  double victim_key = std::numeric_limits<double>::infinity();
  for (int id : st.pool) {
    const ContainerInstance& ci = inst(id);
    if (ci.state != InstanceState::warm_idle) continue;
    double key = ci.ever_active ? ci.last_active_end : ci.setup_ready_at;
    if (key < victim_key || (key == victim_key && id < victim)) {
      victim = id;
      victim_key = key;
    }
  }
  if (victim < 0) return std::nullopt;
  evict(victim);
  return victim;
}

std::optional<int> Cluster::spawn(int site_id, int cls, Warmth warmth) {
  Site& st = s(site_id);
  if (static_cast<int>(st.pool.size()) >= sc_.cluster.container_cap) {
    if (!evict_lru_idle(site_id)) return std::nullopt;
  }
  const double footprint = sc_.cluster.instance_footprint;
  if (footprint > 0 && st.mem_used + footprint > sc_.cluster.mem_capacity) {
    // shed unpinned cached data before giving up
    bool progress = true;
    while (st.mem_used + footprint > sc_.cluster.mem_capacity && progress) {
      progress = false;
      ReplicaState* lru = nullptr;
      double lru_size = 0;
      for (size_t ii = 0; ii < items_.size(); ++ii) {
        for (auto& r : items_[ii].replicas) {
          if (!r.present || r.site != site_id || r.tier != Tier::memory || r.readers > 0) continue;
          if (!lru || r.last_touch < lru->last_touch) {
            lru = &r;
            lru_size = items_[ii].size;
          }
        }
      }
      if (lru) {
        lru->present = false;
        st.mem_used -= lru_size;
        progress = true;
      }
    }
    if (st.mem_used + footprint > sc_.cluster.mem_capacity) return std::nullopt;
  }
  if (warmth == Warmth::prewarmed) {
    if (st.prewarm_stock <= 0) throw SimAbort("prewarmed spawn without stock");
    st.prewarm_stock -= 1;
  }
  integrate(st);
  double duration = warmth == Warmth::cold ? sc_.cluster.setup_cold : sc_.cluster.setup_prewarm;
  if (sc_.cluster.code_size > 0 && !code_seen_[static_cast<size_t>(site_id)][static_cast<size_t>(cls)]) {
    duration += sc_.cluster.code_size / sc_.cluster.net_speed;
    code_seen_[static_cast<size_t>(site_id)][static_cast<size_t>(cls)] = 1;
  }
  int id = static_cast<int>(instances_.size());
  ContainerInstance ci;
  ci.id = id;
  ci.site = site_id;
  ci.cls = cls;
  ci.state = warmth == Warmth::cold ? InstanceState::cold_starting : InstanceState::initializing;
  ci.created_at = now();
  instances_.push_back(ci);
  st.pool.push_back(id);
  st.instances_by_class[static_cast<size_t>(cls)] += 1;
  st.spawning_by_class[static_cast<size_t>(cls)] += 1;
  st.total_spawning += 1;
  st.mem_used += footprint;
  alive_instances_ += 1;
  metrics_.containers_created += 1;
  if (sc_.cluster.setup_consumes_core) reschedule(st);
  eng_.schedule(now() + duration, EventKind::setup_done,
                static_cast<uint64_t>(site_id), static_cast<uint64_t>(id));
  return id;
}

void Cluster::evict(int instance_id) {
  ContainerInstance& ci = inst(instance_id);
  Site& st = s(ci.site);
  st.idle_by_class[static_cast<size_t>(ci.cls)] -= 1;
  st.instances_by_class[static_cast<size_t>(ci.cls)] -= 1;
  remove_from(st.pool, instance_id);
  st.mem_used -= sc_.cluster.instance_footprint;
  ci.alive = false;
  alive_instances_ -= 1;
  finalize_record(ci, ci.ever_active ? ci.last_active_end : ci.setup_ready_at);
}

void Cluster::finalize_record(const ContainerInstance& ci, double life_end) {
  ContainerRecord rec;
  rec.site = ci.site;
  rec.cls = ci.cls;
  rec.created_at = ci.created_at;
  rec.setup_ready_at = ci.setup_ready_at >= 0 ? ci.setup_ready_at : life_end;
  rec.last_active_end = life_end;
  rec.busy_time = ci.busy_time_total;
  rec.ever_active = ci.ever_active;
  metrics_.containers.push_back(rec);
}

void Cluster::finalize_records() {
  for (const auto& ci : instances_) {
    if (!ci.alive) continue;
    double life_end;
    if (ci.state == InstanceState::active) {
      life_end = now();
    } else if (ci.ever_active) {
      life_end = ci.last_active_end;
    } else {
      life_end = ci.setup_ready_at >= 0 ? ci.setup_ready_at : now();
    }
    finalize_record(ci, life_end);
  }
}

int Cluster::queue_size(int site_id, int cls) const {
  return static_cast<int>(site(site_id).queues[static_cast<size_t>(cls)].size());
}

double Cluster::queue_head_time(int site_id, int cls) const {
  const auto& q = site(site_id).queues[static_cast<size_t>(cls)];
  return q.empty() ? std::numeric_limits<double>::infinity() : q.front().enqueued_at;
}

double Cluster::queue_entry_time(int site_id, int cls, int index) const {
  const auto& q = site(site_id).queues[static_cast<size_t>(cls)];
  if (index < 0 || index >= static_cast<int>(q.size())) {
    return std::numeric_limits<double>::infinity();
  }
  return q[static_cast<size_t>(index)].enqueued_at;
}

int Cluster::idle_count(int site_id, int cls) const {
  return site(site_id).idle_by_class[static_cast<size_t>(cls)];
}

int Cluster::active_count(int site_id, int cls) const {
  return site(site_id).active_by_class[static_cast<size_t>(cls)];
}

int Cluster::total_active(int site_id) const { return site(site_id).total_active; }

int Cluster::spawning_count(int site_id, int cls) const {
  return site(site_id).spawning_by_class[static_cast<size_t>(cls)];
}

int Cluster::instance_count(int site_id, int cls) const {
  return site(site_id).instances_by_class[static_cast<size_t>(cls)];
}

int Cluster::pool_size(int site_id) const {
  return static_cast<int>(site(site_id).pool.size());
}

int Cluster::total_instances_alive() const { return alive_instances_; }

double Cluster::total_busy_time() const {
  double sum = 0;
  for (const auto& ci : instances_) sum += ci.busy_time_total;
  return sum;
}

double Cluster::total_integrated_work() const {
  double sum = 0;
  for (const auto& st : sites_) sum += st.integrated_work;
  return sum;
}

bool Cluster::quiescent() const {
  for (const auto& st : sites_) {
    if (st.total_active > 0) return false;
    for (const auto& q : st.queues) {
      if (!q.empty()) return false;
    }
  }
  return true;
}

}  // namespace noahsim
