#include <doctest.h>

#include <cmath>
#include <memory>
#include <numeric>

#include "noahsim/scheduler_noncoop.hpp"
#include "noahsim/verify.hpp"

using namespace noahsim;

TEST_CASE("symmetric servers split the rate evenly") {
  std::vector<double> mu{10, 10};
  auto x = best_reply(4, mu);
  CHECK(x[0] == doctest::Approx(2.0).epsilon(1e-12));
  CHECK(x[1] == doctest::Approx(2.0).epsilon(1e-12));
}

TEST_CASE("uneven servers get water-filled flows") {
  std::vector<double> mu{10, 5};
  auto x = best_reply(3, mu);
  CHECK(x[0] == doctest::Approx(2.971).epsilon(1e-3));
  CHECK(x[1] == doctest::Approx(0.029).epsilon(2e-2));
  CHECK(x[0] + x[1] == doctest::Approx(3.0).epsilon(1e-12));
}

TEST_CASE("slow servers are excluded at light load") {
  std::vector<double> mu{10, 1};
  auto x = best_reply(0.5, mu);
  CHECK(x[0] == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(x[1] == 0.0);
}

TEST_CASE("infeasible rate is an error") {
  std::vector<double> mu{2, 3};
  CHECK_THROWS_AS(best_reply(5.0, mu), std::domain_error);
  CHECK_THROWS_AS(best_reply(6.0, mu), std::domain_error);
  CHECK_NOTHROW(best_reply(4.999, mu));
}

TEST_CASE("best reply satisfies the optimality conditions") {
  RandomStream rnd(5150, "test/kkt");
  for (int t = 0; t < 100; ++t) {
    size_t n = 2 + rnd.uniform_int(7);
    std::vector<double> mu(n);
    double total = 0;
    for (auto& m : mu) {
      m = 0.5 + 20 * rnd.uniform();
      total += m;
    }
    double lambda = (0.05 + 0.9 * rnd.uniform()) * 0.9 * total;
    auto x = best_reply(lambda, mu);

    double sum = std::accumulate(x.begin(), x.end(), 0.0);
    CHECK(std::abs(sum - lambda) <= 1e-9 * std::max(1.0, lambda));

    // marginal delay μ/(μ−x)² equal on used servers, no better unused one
    double used_marginal = -1;
    for (size_t i = 0; i < n; ++i) {
      CHECK(x[i] >= 0.0);
      CHECK(x[i] < mu[i]);
      double d = mu[i] - x[i];
      double marginal = mu[i] / (d * d);
      if (x[i] > 1e-12) {
        if (used_marginal < 0) used_marginal = marginal;
        CHECK(marginal == doctest::Approx(used_marginal).epsilon(1e-6));
      }
    }
    for (size_t i = 0; i < n; ++i) {
      if (x[i] <= 1e-12) CHECK(1.0 / mu[i] >= used_marginal * (1 - 1e-9));
    }
  }
}

TEST_CASE("water filling matches the numeric minimizer") {
  RandomStream rnd(31337, "test/wf-oracle");
  for (int t = 0; t < 25; ++t) {
    size_t n = 2 + rnd.uniform_int(7);
    std::vector<double> mu(n);
    double total = 0;
    for (auto& m : mu) {
      m = 1.0 + 19 * rnd.uniform();
      total += m;
    }
    double lambda = (0.05 + 0.9 * rnd.uniform()) * 0.9 * total;
    auto fast = best_reply(lambda, mu);
    auto slow = verify::minimize_split_oracle(lambda, mu);
    for (size_t i = 0; i < n; ++i) {
      CHECK(std::abs(fast[i] - slow[i]) <= 1e-4);
    }
  }
}

TEST_CASE("single player equilibrium is its best reply") {
  std::vector<double> lambda{6};
  std::vector<std::vector<double>> mu{{10, 8, 3}};
  auto eq = solve_equilibrium(lambda, mu);
  CHECK(eq.converged);
  auto direct = best_reply(6, mu[0]);
  for (size_t i = 0; i < 3; ++i) {
    CHECK(eq.flow[0][i] == doctest::Approx(direct[i]).epsilon(1e-9));
  }
}

TEST_CASE("identical players land on the symmetric equilibrium") {
  std::vector<double> lambda{8, 8};
  std::vector<std::vector<double>> mu{{12, 12, 12}, {12, 12, 12}};
  auto eq = solve_equilibrium(lambda, mu, 1e-9, 1000);
  CHECK(eq.converged);
  for (size_t i = 0; i < 3; ++i) {
    CHECK(eq.flow[0][i] == doctest::Approx(8.0 / 3.0).epsilon(1e-6));
    CHECK(eq.flow[1][i] == doctest::Approx(eq.flow[0][i]).epsilon(1e-6));
  }
}

TEST_CASE("equilibrium is a fixed point of unilateral best replies") {
  RandomStream rnd(808, "test/eq-fp");
  for (int t = 0; t < 10; ++t) {
    size_t K = 2 + rnd.uniform_int(3);
    size_t n = 2 + rnd.uniform_int(4);
    std::vector<std::vector<double>> mu(K, std::vector<double>(n));
    double cap = 0;
    for (size_t i = 0; i < n; ++i) {
      double m = 10 + 40 * rnd.uniform();
      for (size_t k = 0; k < K; ++k) mu[k][i] = m;
      cap += m;
    }
    std::vector<double> lambda(K);
    for (auto& l : lambda) l = (0.1 + 0.6 * rnd.uniform()) * cap / static_cast<double>(K);
    auto eq = solve_equilibrium(lambda, mu, 1e-9, 5000);
    REQUIRE(eq.converged);
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
        CHECK(std::abs(reply[i] - eq.flow[k][i]) / lambda[k] <= 1e-6);
      }
    }
  }
}

namespace {

struct NoncoopHarness {
  Scenario sc;
  Engine eng;
  RunMetrics metrics;
  std::unique_ptr<Cluster> cl;
  std::unique_ptr<EstimatorBank> est;
  std::unique_ptr<NoncoopScheduler> sched;

  NoncoopHarness() {
    sc.scheduler.kind = SchedulerKind::noncoop;
    sc.workload.count = 2;
    sc.finalize();
    cl = std::make_unique<Cluster>(sc, eng, metrics);
    est = std::make_unique<EstimatorBank>(sc);
    sched = std::make_unique<NoncoopScheduler>(sc, *cl, *est, eng, metrics);
  }

  void feed_arrivals(int cls, double rate, double from, double until) {
    for (double t = from; t < until; t += 1.0 / rate) est->observe_arrival(cls, t);
  }
};

}  // namespace

TEST_CASE("estimable classes sample their equilibrium split") {
  NoncoopHarness h;
  h.feed_arrivals(0, 20, 0.0, 2.0);
  h.eng.schedule(2.0, EventKind::timer);
  h.eng.run_until_drained();

  // identical sites: the split is uniform; check the sampler hits all sites
  std::vector<long> hits(10, 0);
  for (int i = 0; i < 100000; ++i) hits[static_cast<size_t>(h.sched->dispatch(i, 0))] += 1;
  for (long c : hits) {
    CHECK(std::abs(c / 100000.0 - 0.1) < 0.01);
  }
}

TEST_CASE("rate jumps force an equilibrium recompute") {
  NoncoopHarness h;
  h.feed_arrivals(0, 10, 0.0, 2.0);
  h.eng.schedule(2.0, EventKind::timer);
  h.eng.run_until_drained();
  (void)h.sched->dispatch(0, 0);
  int before = h.sched->recompute_count();
  // same instant, no rate change: no recompute
  (void)h.sched->dispatch(1, 0);
  CHECK(h.sched->recompute_count() == before);
  // the estimate drifts past the 10% trigger: recompute inside the period
  h.feed_arrivals(0, 40, 2.0, 3.0);
  (void)h.sched->dispatch(2, 0);
  CHECK(h.sched->recompute_count() == before + 1);
}
