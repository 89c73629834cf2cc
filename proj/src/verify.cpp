#include "noahsim/verify.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <queue>

#include "noahsim/queueing.hpp"
#include "noahsim/rng.hpp"
#include "noahsim/scheduler_noncoop.hpp"
#include "noahsim/simulation.hpp"

namespace noahsim::verify {

double mmc_sim_mean_wait(double lambda, double mu, int servers, long arrivals,
                         uint64_t seed) {
  RandomStream arr(seed, "verify/mmc-arrivals");
  RandomStream svc(seed, "verify/mmc-service");
  std::priority_queue<double, std::vector<double>, std::greater<>> free_at;
  for (int i = 0; i < servers; ++i) free_at.push(0.0);
  double t = 0, wait_sum = 0;
  for (long i = 0; i < arrivals; ++i) {
    t += arr.exponential(lambda);
    double f = free_at.top();
    free_at.pop();
    double begin = std::max(t, f);
    wait_sum += begin - t;
    free_at.push(begin + svc.exponential(mu));
  }
  return wait_sum / static_cast<double>(arrivals);
}

double mm1_ps_sim_mean_response(double lambda, double mean_service, long jobs,
                                uint64_t seed) {
  Scenario sc;
  sc.cluster.hosts = 1;
  sc.cluster.cores = 1;
  sc.cluster.container_cap = 1 << 20;
  sc.cluster.exec_slots = 1 << 20;
  sc.cluster.setup_cold = 0;
  sc.cluster.setup_prewarm = 0;
  sc.cluster.holding_time = 1e12;
  sc.scheduler.kind = SchedulerKind::ow;
  ClassConfig job;
  job.name = "job";
  job.exec_time = mean_service;
  job.exec_dist = ExecDist::exponential;
  sc.classes.push_back(job);
  sc.seed = seed;
  sc.finalize();

  RandomStream arr(seed, "verify/ps-arrivals");
  std::vector<Arrival> arrivals;
  arrivals.reserve(static_cast<size_t>(jobs));
  double t = 0;
  for (long i = 0; i < jobs; ++i) {
    t += arr.exponential(lambda);
    arrivals.push_back({t, 0});
  }
  RunOptions opts;
  opts.arrivals_override = &arrivals;
  RunResult r = run_simulation(sc, opts);
  return r.summary.mean_response;
}

std::vector<double> project_simplex(std::vector<double> v, double total) {
  std::vector<double> u = v;
  std::sort(u.begin(), u.end(), std::greater<>());
  double css = 0, theta = 0;
  for (size_t j = 0; j < u.size(); ++j) {
    css += u[j];
    double t = (css - total) / static_cast<double>(j + 1);
    if (u[j] - t > 0) theta = t;
  }
  for (auto& x : v) x = std::max(0.0, x - theta);
  return v;
}

namespace {

double split_objective(std::span<const double> x, std::span<const double> mu) {
  double f = 0;
  for (size_t i = 0; i < x.size(); ++i) {
    if (x[i] < 0 || x[i] >= mu[i]) return std::numeric_limits<double>::infinity();
    f += x[i] / (mu[i] - x[i]);
  }
  return f;
}

}  // namespace

std::vector<double> minimize_split_oracle(double lambda, std::span<const double> mu,
                                          int max_iters) {
  const size_t n = mu.size();
  double mu_sum = 0;
  for (double m : mu) mu_sum += m;
  std::vector<double> x(n);
  for (size_t i = 0; i < n; ++i) x[i] = lambda * mu[i] / mu_sum;  // interior start

  double step = 1.0;
  std::vector<double> g(n), trial(n);
  for (int it = 0; it < max_iters; ++it) {
    double fx = split_objective(x, mu);
    for (size_t i = 0; i < n; ++i) {
      double d = mu[i] - x[i];
      g[i] = mu[i] / (d * d);
    }
    double moved = 0;
    for (;;) {
      for (size_t i = 0; i < n; ++i) trial[i] = x[i] - step * g[i];
      trial = project_simplex(std::move(trial), lambda);
      double ft = split_objective(trial, mu);
      double lin = 0, dist2 = 0;
      for (size_t i = 0; i < n; ++i) {
        double d = trial[i] - x[i];
        lin += g[i] * d;
        dist2 += d * d;
      }
      if (ft <= fx + lin + dist2 / (2 * step) + 1e-18) {
        moved = std::sqrt(dist2);
        break;
      }
      step *= 0.5;
      if (step < 1e-18) {
        moved = 0;
        break;
      }
    }
    if (moved == 0 || moved < 1e-13) {
      x = trial;
      break;
    }
    x = trial;
    step *= 1.3;
  }
  return x;
}

namespace {

std::string fmt_rel(double got, double want) {
  char buf[96];
  std::snprintf(buf, sizeof buf, "got=%.6g want=%.6g rel=%.3g%%", got, want,
                want != 0 ? 100.0 * std::abs(got - want) / std::abs(want) : 0.0);
  return buf;
}

Check check_rel(const std::string& name, double got, double want, double tol) {
  Check c{name, false, fmt_rel(got, want)};
  c.pass = std::abs(got - want) <= tol * std::abs(want);
  return c;
}

}  // namespace

std::vector<Check> run_battery(bool quick) {
  std::vector<Check> checks;
  using queueing::erlang_c;
  using queueing::expected_wait;

  {
    double max_err = 0;
    for (double rho : {0.1, 0.25, 0.5, 0.75, 0.9}) {
      max_err = std::max(max_err, std::abs(erlang_c(1, rho) - rho));
    }
    max_err = std::max(max_err, std::abs(erlang_c(2, 1.0) - 1.0 / 3.0));
    char buf[64];
    std::snprintf(buf, sizeof buf, "max_err=%.3g", max_err);
    checks.push_back({"erlang-c-identities", max_err <= 1e-12, buf});
  }
  {
    double v = erlang_c(500, 450.0);
    char buf[64];
    std::snprintf(buf, sizeof buf, "C(500,450)=%.6g", v);
    checks.push_back({"erlang-c-stable-recurrence", std::isfinite(v) && v > 0 && v < 1, buf});
  }

  const long n_mmc = quick ? 100000 : 500000;
  {
    double sim = mmc_sim_mean_wait(2.5, 5.0, 1, n_mmc, 41);
    checks.push_back(check_rel("mm1-fifo-wait", sim, expected_wait(1, 2.5, 5.0), 0.05));
  }
  {
    const struct {
      double lambda, mu;
      int c;
    } cases[] = {{5, 5, 2}, {12, 5, 3}, {40, 5, 10}};
    for (const auto& cs : cases) {
      double sim = mmc_sim_mean_wait(cs.lambda, cs.mu, cs.c, n_mmc, 42);
      char name[64];
      std::snprintf(name, sizeof name, "mmc-wait-%g-%g-%d", cs.lambda, cs.mu, cs.c);
      checks.push_back(
          check_rel(name, sim, expected_wait(cs.c, cs.lambda, cs.mu), 0.05));
    }
  }
  {
    const long jobs = quick ? 30000 : 200000;
    double sim = mm1_ps_sim_mean_response(2.5, 0.2, jobs, 7);
    checks.push_back(check_rel("mm1-ps-response", sim, 0.2 / (1.0 - 0.5), 0.05));
  }

  {
    const int cases = quick ? 30 : 100;
    RandomStream rnd(12345, "verify/best-reply");
    double worst = 0;
    for (int t = 0; t < cases; ++t) {
      size_t n = 2 + rnd.uniform_int(7);
      std::vector<double> mu(n);
      double total = 0;
      for (auto& m : mu) {
        m = 1.0 + 19.0 * rnd.uniform();
        total += m;
      }
      double lambda = (0.05 + 0.90 * rnd.uniform()) * 0.9 * total;
      auto fast = best_reply(lambda, mu);
      auto slow = minimize_split_oracle(lambda, mu);
      for (size_t i = 0; i < n; ++i) {
        worst = std::max(worst, std::abs(fast[i] - slow[i]));
      }
    }
    char buf[64];
    std::snprintf(buf, sizeof buf, "max_coord_err=%.3g over %d instances", worst, cases);
    checks.push_back({"best-reply-vs-oracle", worst <= 1e-4, buf});
  }

  {
    // every class's best reply against the others reproduces its own flow
    RandomStream rnd(999, "verify/equilibrium");
    double worst = 0;
    bool all_converged = true;
    const int cases = quick ? 5 : 20;
    for (int t = 0; t < cases; ++t) {
      size_t K = 1 + rnd.uniform_int(4);
      size_t n = 2 + rnd.uniform_int(5);
      std::vector<std::vector<double>> mu(K, std::vector<double>(n));
      std::vector<double> lambda(K);
      double cap = 0;
      for (size_t i = 0; i < n; ++i) {
        double m = 5.0 + 45.0 * rnd.uniform();
        for (size_t k = 0; k < K; ++k) mu[k][i] = m;
        cap += m;
      }
      for (size_t k = 0; k < K; ++k) {
        lambda[k] = (0.1 + 0.7 * rnd.uniform()) * cap / static_cast<double>(K);
      }
      Equilibrium eq = solve_equilibrium(lambda, mu, 1e-9, 2000);
      all_converged = all_converged && eq.converged;
      for (size_t k = 0; k < K; ++k) {
        std::vector<double> residual(n);
        for (size_t i = 0; i < n; ++i) {
          residual[i] = mu[k][i];
          for (size_t j = 0; j < K; ++j) {
            if (j != k) residual[i] -= eq.flow[j][i];
          }
        }
        auto reply = best_reply(lambda[k], residual);
        for (size_t i = 0; i < n; ++i) {
          worst = std::max(worst, std::abs(reply[i] - eq.flow[k][i]) / lambda[k]);
        }
      }
    }
    char buf[96];
    std::snprintf(buf, sizeof buf, "max_refix=%.3g converged=%s", worst,
                  all_converged ? "yes" : "no");
    checks.push_back({"equilibrium-fixed-point", all_converged && worst <= 1e-6, buf});
  }

  return checks;
}

int run_battery_main(bool quick, std::ostream& out) {
  auto checks = run_battery(quick);
  bool all = true;
  for (const auto& c : checks) {
    out << (c.pass ? "PASS  " : "FAIL  ") << c.name;
    for (size_t i = c.name.size(); i < 30; ++i) out << ' ';
    out << c.detail << "\n";
    all = all && c.pass;
  }
  out << (all ? "verify: all checks passed\n" : "verify: FAILURES above\n");
  return all ? 0 : 1;
}

}  // namespace noahsim::verify
