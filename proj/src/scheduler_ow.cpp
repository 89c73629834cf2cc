#include "noahsim/scheduler_ow.hpp"

#include <numeric>

namespace noahsim {

std::vector<int> build_generators(int pool_size) {
  std::vector<int> g;
  for (int i = 1; i <= pool_size; ++i) {
    bool coprime = true;
    for (int kept : g) {
      if (std::gcd(i, kept) != 1) {
        coprime = false;
        break;
      }
    }
    if (coprime) g.push_back(i);
  }
  return g;
}

int ow_probe(uint64_t hash, std::span<const long> active_counts,
             std::span<const int> generators, int busy_threshold) {
  const uint64_t n = active_counts.size();
  const uint64_t g = static_cast<uint64_t>(generators[hash % generators.size()]);
  for (int step = 1; step <= 3; ++step) {
    const long lvl = static_cast<long>(step) * busy_threshold;
    for (uint64_t k = 0; k < n; ++k) {
      uint64_t x = (hash + k * g) % n;
      if (active_counts[x] < lvl) return static_cast<int>(x);
    }
  }
  return -1;
}

OwScheduler::OwScheduler(const Scenario& sc, Cluster& cl)
    : policy_(sc, cl),
      busy_threshold_(sc.scheduler.busy_threshold),
      generators_(build_generators(sc.cluster.hosts)),
      counts_(static_cast<size_t>(sc.cluster.hosts), 0),
      fallback_(sc.seed, "scheduler/ow") {
  for (const auto& c : sc.classes) hashes_.push_back(fnv1a64(c.name));
}

int OwScheduler::select_host(uint64_t hash) {
  int site = ow_probe(hash, counts_, generators_, busy_threshold_);
  if (site >= 0) return site;
  return static_cast<int>(fallback_.uniform_int(counts_.size()));
}

int OwScheduler::dispatch(int event_id, int cls) {
  (void)event_id;
  return select_host(hashes_[static_cast<size_t>(cls)]);
}

void OwScheduler::on_dispatched(int site, int cls) {
  (void)cls;
  counts_[static_cast<size_t>(site)] += 1;
}

void OwScheduler::on_completed(int site, int cls) {
  (void)cls;
  counts_[static_cast<size_t>(site)] -= 1;
}

}  // namespace noahsim
