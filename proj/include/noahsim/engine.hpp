#pragma once

#include <cstdint>
#include <functional>
#include <queue>
#include <stdexcept>
#include <vector>

#include "noahsim/hash.hpp"

namespace noahsim {

// Fatal simulation error. The CLI maps it to a nonzero exit.
struct SimAbort : std::runtime_error {
  using std::runtime_error::runtime_error;
};

enum class EventKind : uint8_t {
  arrival,
  exec_progress,
  transfer_done,
  setup_done,
  timer,
  shutdown,
};

// A timestamped occurrence. Dequeued in non-decreasing time order; equal times
// are FIFO by sequence number. The payload words identify subject entities and
// their meaning depends on the kind.
struct SimEvent {
  double time = 0;
  uint64_t seq = 0;
  EventKind kind = EventKind::timer;
  uint64_t a = 0, b = 0, c = 0;
};

// Deterministic discrete-event core: virtual clock, event queue, run loop.
// A fixed (scenario, seed) pair yields a bit-identical event trace; the
// running FNV digest of processed events makes that checkable.
class Engine {
 public:
  using Handler = std::function<void(const SimEvent&)>;

  void set_handler(Handler h) { handler_ = std::move(h); }

  // Scheduling in the past is a logic error and aborts the run.
  uint64_t schedule(double time, EventKind kind, uint64_t a = 0, uint64_t b = 0,
                    uint64_t c = 0);

  // Stops the run loop once a shutdown event (scheduled now) is reached;
  // later events are discarded.
  void request_shutdown() { schedule(now_, EventKind::shutdown); }

  // Processes events until the queue empties or a shutdown event is reached.
  // Returns the clock at the last processed event (0 for an empty run).
  double run_until_drained() { return run_internal(nullptr); }

  // Processes events with time <= t_stop, leaving the rest queued.
  double run_until(double t_stop) { return run_internal(&t_stop); }

  double now() const { return now_; }
  uint64_t events_processed() const { return processed_; }
  uint64_t trace_digest() const { return digest_.value(); }
  bool shutdown_seen() const { return shutdown_; }

  void set_livelock_limit(uint64_t n) { livelock_limit_ = n; }

 private:
  double run_internal(const double* t_stop);

  struct Later {
    bool operator()(const SimEvent& x, const SimEvent& y) const {
      if (x.time != y.time) return x.time > y.time;
      return x.seq > y.seq;
    }
  };

  std::priority_queue<SimEvent, std::vector<SimEvent>, Later> queue_;
  Handler handler_;
  double now_ = 0;
  uint64_t next_seq_ = 0;
  uint64_t processed_ = 0;
  uint64_t livelock_limit_ = 10'000'000;
  bool shutdown_ = false;
  Fnv1aDigest digest_;
};

}  // namespace noahsim
