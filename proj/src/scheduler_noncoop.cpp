#include "noahsim/scheduler_noncoop.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace noahsim {

std::vector<double> best_reply(double lambda, std::span<const double> residual) {
  const size_t n = residual.size();
  std::vector<double> x(n, 0.0);
  if (lambda < 0) throw std::domain_error("best_reply: negative rate");
  if (lambda == 0) return x;

  std::vector<size_t> order;
  double capacity = 0;
  for (size_t i = 0; i < n; ++i) {
    if (residual[i] > 0) {
      order.push_back(i);
      capacity += residual[i];
    }
  }
  if (lambda >= capacity) throw std::domain_error("best_reply: infeasible (rate >= capacity)");
  std::sort(order.begin(), order.end(), [&](size_t a, size_t b) {
    if (residual[a] != residual[b]) return residual[a] > residual[b];
    return a < b;
  });

  // shrink the candidate set until the smallest member keeps positive flow
  size_t m = order.size();
  double sum_mu = 0, sum_sqrt = 0;
  for (size_t i = 0; i < m; ++i) {
    sum_mu += residual[order[i]];
    sum_sqrt += std::sqrt(residual[order[i]]);
  }
  while (m > 1) {
    double t = (sum_mu - lambda) / sum_sqrt;
    double mu_min = residual[order[m - 1]];
    if (mu_min - std::sqrt(mu_min) * t >= 0) break;
    sum_mu -= mu_min;
    sum_sqrt -= std::sqrt(mu_min);
    --m;
  }
  double t = (sum_mu - lambda) / sum_sqrt;
  for (size_t i = 0; i < m; ++i) {
    double mu = residual[order[i]];
    x[order[i]] = std::max(0.0, mu - std::sqrt(mu) * t);
  }
  return x;
}

Equilibrium solve_equilibrium(const std::vector<double>& lambda,
                              const std::vector<std::vector<double>>& mu_total,
                              double eps, int round_cap,
                              std::vector<std::vector<double>> warm) {
  const size_t K = lambda.size();
  const size_t n = K ? mu_total[0].size() : 0;
  Equilibrium res;
  res.flow.assign(K, std::vector<double>(n, 0.0));
  if (warm.size() == K) {
    bool shaped = true;
    for (const auto& row : warm) shaped &= row.size() == n;
    if (shaped) res.flow = std::move(warm);
  }
  for (size_t k = 0; k < K; ++k) {
    if (lambda[k] <= 0) std::fill(res.flow[k].begin(), res.flow[k].end(), 0.0);
  }

  std::vector<double> residual(n);
  for (int round = 0; round < round_cap; ++round) {
    double max_change = 0;
    for (size_t k = 0; k < K; ++k) {
      if (lambda[k] <= 0) continue;
      double capacity = 0;
      for (size_t i = 0; i < n; ++i) {
        double r = mu_total[k][i];
        for (size_t j = 0; j < K; ++j) {
          if (j != k) r -= res.flow[j][i];
        }
        residual[i] = r;
        if (r > 0) capacity += r;
      }
      // an oversubscribed player splits a shrunk view of its rate
      double rate = std::min(lambda[k], 0.98 * capacity);
      std::vector<double> next(n, 0.0);
      if (rate > 0) next = best_reply(rate, residual);
      double denom = std::max(rate, 1e-12);
      for (size_t i = 0; i < n; ++i) {
        max_change = std::max(max_change, std::abs(next[i] - res.flow[k][i]) / denom);
      }
      res.flow[k] = std::move(next);
    }
    res.rounds = round + 1;
    if (max_change < eps) {
      res.converged = true;
      break;
    }
  }
  return res;
}

NoncoopScheduler::NoncoopScheduler(const Scenario& sc, Cluster& cl,
                                   EstimatorBank& est, Engine& eng,
                                   RunMetrics& metrics)
    : policy_(sc, cl),
      sc_(sc),
      est_(est),
      eng_(eng),
      metrics_(metrics),
      stream_(sc.seed, "scheduler/noncoop"),
      flow_(sc.classes.size(),
            std::vector<double>(static_cast<size_t>(sc.cluster.hosts), 0.0)),
      split_(sc.classes.size(),
             std::vector<double>(static_cast<size_t>(sc.cluster.hosts), 0.0)),
      lambda_used_(sc.classes.size(), 0.0) {}

bool NoncoopScheduler::needs_recompute() const {
  if (eng_.now() - last_recompute_ >= sc_.scheduler.nc_recompute_period) return true;
  for (size_t k = 0; k < lambda_used_.size(); ++k) {
    double cur = est_.lambda_hat(static_cast<int>(k), eng_.now());
    double used = lambda_used_[k];
    if (used == 0 ? cur > 0 : std::abs(cur - used) > sc_.scheduler.nc_recompute_rel * used) {
      return true;
    }
  }
  return false;
}

void NoncoopScheduler::recompute() {
  const size_t K = sc_.classes.size();
  const size_t n = static_cast<size_t>(sc_.cluster.hosts);
  std::vector<double> lambda(K);
  std::vector<std::vector<double>> mu(K, std::vector<double>(n));
  for (size_t k = 0; k < K; ++k) {
    lambda[k] = est_.lambda_hat(static_cast<int>(k), eng_.now());
    double per_site = sc_.cluster.cores * est_.mu_hat(static_cast<int>(k));
    std::fill(mu[k].begin(), mu[k].end(), per_site);
  }
  Equilibrium eq = solve_equilibrium(lambda, mu, sc_.scheduler.nc_epsilon,
                                     sc_.scheduler.nc_round_cap, std::move(flow_));
  if (!eq.converged) {
    bool any_active = false;
    for (double l : lambda) any_active |= l > 0;
    if (any_active) metrics_.equilibrium_converged = false;
  }
  flow_ = std::move(eq.flow);
  for (size_t k = 0; k < K; ++k) {
    double total = std::accumulate(flow_[k].begin(), flow_[k].end(), 0.0);
    split_[k].assign(n, 0.0);
    if (total > 0) {
      for (size_t i = 0; i < n; ++i) split_[k][i] = flow_[k][i] / total;
    }
  }
  lambda_used_ = std::move(lambda);
  last_recompute_ = eng_.now();
  recompute_count_ += 1;
}

int NoncoopScheduler::dispatch(int event_id, int cls) {
  (void)event_id;
  if (needs_recompute()) recompute();
  const auto& p = split_[static_cast<size_t>(cls)];
  double mass = std::accumulate(p.begin(), p.end(), 0.0);
  if (mass <= 0) {
    // not estimable yet: spread like the converged symmetric game would
    return static_cast<int>(stream_.uniform_int(p.size()));
  }
  double u = stream_.uniform() * mass;
  double acc = 0;
  for (size_t i = 0; i < p.size(); ++i) {
    acc += p[i];
    if (u < acc) return static_cast<int>(i);
  }
  return static_cast<int>(p.size()) - 1;
}

}  // namespace noahsim
