#include "noahsim/engine.hpp"

#include <cmath>
#include <string>

namespace noahsim {

uint64_t Engine::schedule(double time, EventKind kind, uint64_t a, uint64_t b,
                          uint64_t c) {
  if (!std::isfinite(time) || time < now_) {
    throw SimAbort("schedule: event at t=" + std::to_string(time) +
                   " behind clock t=" + std::to_string(now_));
  }
  SimEvent ev{time, next_seq_++, kind, a, b, c};
  queue_.push(ev);
  return ev.seq;
}

double Engine::run_internal(const double* t_stop) {
  uint64_t stalled = 0;
  while (!queue_.empty()) {
    SimEvent ev = queue_.top();
    if (t_stop && ev.time > *t_stop) break;
    queue_.pop();
    if (ev.time > now_) {
      stalled = 0;
    } else if (++stalled > livelock_limit_) {
      throw SimAbort("livelock: clock stuck at t=" + std::to_string(now_) +
                     " after " + std::to_string(stalled) +
                     " events without advancing");
    }
    now_ = ev.time;
    ++processed_;
    digest_.update_value(ev.time);
    digest_.update_value(ev.seq);
    digest_.update_value(ev.kind);
    digest_.update_value(ev.a);
    digest_.update_value(ev.b);
    digest_.update_value(ev.c);
    if (ev.kind == EventKind::shutdown) {
      shutdown_ = true;
      break;
    }
    if (handler_) handler_(ev);
  }
  return now_;
}

}  // namespace noahsim
