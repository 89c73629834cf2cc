#pragma once

#include <ostream>
#include <span>
#include <string>
#include <vector>

namespace noahsim::verify {

// Independent M/M/c FIFO simulation (earliest-free-server recursion),
// deliberately separate from the event engine: it is the oracle side of the
// Erlang-C dual-route check.
double mmc_sim_mean_wait(double lambda, double mu, int servers, long arrivals,
                         uint64_t seed);

// M/M/1 processor-sharing response time measured through the full engine and
// cluster on a one-core site with free spawns.
double mm1_ps_sim_mean_response(double lambda, double mean_service, long jobs,
                                uint64_t seed);

// Numeric constrained minimizer for Σ x_i/(μ_i − x_i) on the simplex
// {x ≥ 0, Σx = λ}: projected gradient with backtracking. The oracle side of
// the best-reply dual-route check.
std::vector<double> minimize_split_oracle(double lambda, std::span<const double> mu,
                                          int max_iters = 200000);

std::vector<double> project_simplex(std::vector<double> v, double total);

struct Check {
  std::string name;
  bool pass = false;
  std::string detail;
};

// The analytic verification battery behind `verify`: Erlang-C identities and
// stability, M/M/1 and M/M/c waits vs the formula, M/M/1-PS response through
// the cluster, best replies vs the numeric oracle, equilibrium fixed points.
std::vector<Check> run_battery(bool quick);

// Prints one pass/fail line per check; returns 0 iff all pass.
int run_battery_main(bool quick, std::ostream& out);

}  // namespace noahsim::verify
