#include "noahsim/simulation.hpp"

#include <fstream>

#include "noahsim/cluster.hpp"
#include "noahsim/engine.hpp"
#include "noahsim/estimators.hpp"
#include "noahsim/scheduler_noncoop.hpp"
#include "noahsim/scheduler_ow.hpp"

namespace noahsim {

RunResult run_simulation(const Scenario& sc, const RunOptions& opts) {
  Engine eng;
  eng.set_livelock_limit(opts.livelock_limit);
  RunMetrics metrics;
  Cluster cluster(sc, eng, metrics);
  EstimatorBank est(sc);

  std::unique_ptr<SchedulerBase> owned;
  NoahScheduler* noah = nullptr;
  switch (sc.scheduler.kind) {
    case SchedulerKind::ow:
      owned = std::make_unique<OwScheduler>(sc, cluster);
      break;
    case SchedulerKind::noncoop:
      owned = std::make_unique<NoncoopScheduler>(sc, cluster, est, eng, metrics);
      break;
    case SchedulerKind::noah: {
      auto p = std::make_unique<NoahScheduler>(sc, cluster, est, eng, metrics);
      noah = p.get();
      owned = std::move(p);
      break;
    }
  }
  SchedulerBase& sched = *owned;

  std::vector<Arrival> arrivals;
  if (opts.arrivals_override) {
    arrivals = *opts.arrivals_override;
  } else if (!sc.arrivals_file.empty()) {
    std::ifstream in(sc.arrivals_file);
    if (!in) throw ScenarioError("cannot open arrivals file '" + sc.arrivals_file + "'");
    arrivals = load_arrival_trace(in, sc);
  } else {
    arrivals = build_arrivals(sc);
  }

  const long total = static_cast<long>(arrivals.size());
  metrics.events.resize(arrivals.size());
  for (size_t i = 0; i < arrivals.size(); ++i) {
    metrics.events[i].cls = arrivals[i].class_id;
    metrics.events[i].arrival = arrivals[i].time;
    eng.schedule(arrivals[i].time, EventKind::arrival, i);
  }

  auto class_name = [&](int cls) -> std::string_view {
    return sc.classes[static_cast<size_t>(cls)].name;
  };

  cluster.hooks.on_event_start = [&](int ev, int site) {
    if (opts.trace) {
      opts.trace(eng.now(), class_name(metrics.events[static_cast<size_t>(ev)].cls),
                 site, "start");
    }
  };
  cluster.hooks.on_event_complete = [&](int ev, int site, double start, double end) {
    int cls = metrics.events[static_cast<size_t>(ev)].cls;
    est.observe_service(cls, end - start);
    sched.on_completed(site, cls);
    if (opts.trace) opts.trace(end, class_name(cls), site, "completion");
    if (metrics.completions == total) eng.request_shutdown();
  };
  cluster.hooks.on_setup_done = [&](int site, int cls, double duration) {
    est.observe_setup(site, cls, duration);
  };
  cluster.hooks.on_site_change = [&](int site) { sched.policy().reevaluate(site); };
  if (noah) {
    noah->set_observer(opts.noah_observer);
    if (total > 0) noah->start_control_timer();
  }

  eng.set_handler([&](const SimEvent& ev) {
    switch (ev.kind) {
      case EventKind::arrival: {
        const int id = static_cast<int>(ev.a);
        EventRecord& rec = metrics.events[static_cast<size_t>(id)];
        est.observe_arrival(rec.cls, ev.time);
        if (opts.trace) opts.trace(ev.time, class_name(rec.cls), -1, "arrival");
        int site = sched.dispatch(id, rec.cls);
        rec.dispatch = ev.time;
        rec.site = site;
        sched.on_dispatched(site, rec.cls);
        if (opts.trace) opts.trace(ev.time, class_name(rec.cls), site, "dispatch");
        sched.policy().on_arrival(site, id, rec.cls);
        break;
      }
      case EventKind::exec_progress:
        cluster.handle_exec_progress(ev);
        break;
      case EventKind::transfer_done:
        cluster.handle_transfer_done(ev);
        break;
      case EventKind::setup_done:
        cluster.handle_setup_done(ev);
        break;
      case EventKind::timer:
        if (ev.a == NoahScheduler::kControlTimer) {
          if (noah) noah->control_tick();
        } else {
          cluster.handle_idle_timer(ev);
        }
        break;
      case EventKind::shutdown:
        break;
    }
  });

  double final_time = eng.run_until_drained();

  if (metrics.completions != total) {
    throw SimAbort("conservation violated: " + std::to_string(total) +
                   " arrivals but " + std::to_string(metrics.completions) +
                   " completions");
  }
  if (!cluster.quiescent()) {
    throw SimAbort("drained run left queued or executing events behind");
  }
  cluster.finalize_records();

  RunResult res;
  res.final_time = final_time;
  res.trace_digest = eng.trace_digest();
  res.engine_events = eng.events_processed();
  res.busy_time_total = cluster.total_busy_time();
  res.integrated_work = cluster.total_integrated_work();
  res.summary = summarize(sc, scheduler_label(sc.scheduler), metrics, final_time,
                          res.trace_digest);
  res.metrics = std::move(metrics);
  return res;
}

}  // namespace noahsim
