#pragma once

#include <span>
#include <vector>

#include "noahsim/rng.hpp"
#include "noahsim/scheduler.hpp"

namespace noahsim {

// Greedy pairwise-coprime generator set: scan i = 1..pool_size, keeping i iff
// gcd(i, g) = 1 for every kept g. (The scan starts at 1: generator 0 would
// yield no progression.)
std::vector<int> build_generators(int pool_size);

// One pass of the documented probe order: g = G[h mod |G|]; for
// lvl = t, 2t, 3t probe I[(h + k*g) mod |I|] for k = 0..|I|-1 and return the
// first site whose active count is below lvl. -1 when every probe fails
// (the caller falls back to a random site).
int ow_probe(uint64_t hash, std::span<const long> active_counts,
             std::span<const int> generators, int busy_threshold);

// Hash-home load balancer with coprime-generator progression, escalating
// busy thresholds and random fallback. Active counts are the controller's
// shared view: incremented at dispatch, decremented at completion
// (accepted-but-unfinished events per site).
class OwScheduler : public SchedulerBase {
 public:
  OwScheduler(const Scenario& sc, Cluster& cl);

  int dispatch(int event_id, int cls) override;
  void on_dispatched(int site, int cls) override;
  void on_completed(int site, int cls) override;
  SitePolicy& policy() override { return policy_; }

  int select_host(uint64_t hash);
  const std::vector<long>& active_counts() const { return counts_; }
  const std::vector<int>& generators() const { return generators_; }
  uint64_t class_hash(int cls) const { return hashes_[static_cast<size_t>(cls)]; }

 private:
  WhiskSitePolicy policy_;
  int busy_threshold_;
  std::vector<int> generators_;
  std::vector<uint64_t> hashes_;  // per class, FNV-1a of the function name
  std::vector<long> counts_;
  RandomStream fallback_;
};

}  // namespace noahsim
