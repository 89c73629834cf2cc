#pragma once

#include <span>
#include <vector>

#include "noahsim/estimators.hpp"
#include "noahsim/rng.hpp"
#include "noahsim/scheduler.hpp"

namespace noahsim {

// Individually optimal split of an arrival rate across servers with residual
// rates mu_resid: minimizes Σ x_i/(μ_i − x_i) subject to x ≥ 0, Σ x = λ.
// Water-filling: sites sorted by μ descending, the largest prefix S with
// x_i = μ_i − √μ_i (Σ_S μ − λ)/Σ_S √μ ≥ 0 carries the flow, the rest get 0.
// Throws std::domain_error when λ ≥ Σ μ_resid (infeasible).
std::vector<double> best_reply(double lambda, std::span<const double> residual);

struct Equilibrium {
  std::vector<std::vector<double>> flow;  // [class][site]
  bool converged = false;
  int rounds = 0;
};

// Round-robin best replies over classes until the largest split-probability
// change drops below eps (or the round cap is hit). A class whose rate does
// not fit its residual capacity plays with a proportionally shrunk rate.
Equilibrium solve_equilibrium(const std::vector<double>& lambda,
                              const std::vector<std::vector<double>>& mu_total,
                              double eps = 1e-6, int round_cap = 200,
                              std::vector<std::vector<double>> warm = {});

// Load balancer that treats every function class as a player splitting its
// perceived arrival rate across sites viewed as M/M/1 servers, and routes
// each event by sampling its class's equilibrium split.
class NoncoopScheduler : public SchedulerBase {
 public:
  NoncoopScheduler(const Scenario& sc, Cluster& cl, EstimatorBank& est,
                   Engine& eng, RunMetrics& metrics);

  int dispatch(int event_id, int cls) override;
  SitePolicy& policy() override { return policy_; }

  // exposed for tests
  void recompute();
  const std::vector<std::vector<double>>& splits() const { return split_; }
  int recompute_count() const { return recompute_count_; }

 private:
  bool needs_recompute() const;

  WhiskSitePolicy policy_;
  const Scenario& sc_;
  EstimatorBank& est_;
  Engine& eng_;
  RunMetrics& metrics_;
  RandomStream stream_;
  std::vector<std::vector<double>> flow_;   // last equilibrium flows
  std::vector<std::vector<double>> split_;  // normalized per class
  std::vector<double> lambda_used_;         // λ̂ snapshot behind the splits
  double last_recompute_ = -1e300;
  int recompute_count_ = 0;
};

}  // namespace noahsim
