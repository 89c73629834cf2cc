#pragma once

#include <cstdint>
#include <stdexcept>

namespace noahsim::queueing {

// Waiting probability C(c, a) for an M/M/c queue with offered load a = λ/μ,
// evaluated through the Erlang-B recurrence so large server counts stay in
// range (no raw factorials).
double erlang_c(int servers, double offered_load);

// Mean queueing delay C(c, λ/μ) / (cμ − λ). Zero arrivals wait zero.
double expected_wait(int servers, double lambda, double mu);

// Smallest c with cμ > λ and expected_wait(c, λ, μ) < alpha_s, searching up
// from ⌊λ/μ⌋+1. Zero demand returns the configured floor.
int min_instances(double lambda, double mu, double alpha_s, int c_min = 0);

// EWMA over positive duration samples with a half-life measured in samples.
// The prior counts as an initial mean ("shared experience" seeding).
class DurationEwma {
 public:
  DurationEwma(double prior_s, double halflife_samples);

  void observe(double duration_s);

  double mean() const { return mean_; }
  uint64_t samples() const { return samples_; }

 private:
  double mean_;
  double keep_;  // weight retained per sample: 2^(-1/halflife)
  uint64_t samples_ = 0;
};

// Per-class arrival and service estimators.
//
// λ̂ inverts an EWMA of interarrival gaps whose weights decay with elapsed
// time (half-life in seconds). Reads between arrivals fold in the open gap,
// so the estimate decays once arrivals stop. μ̂ inverts a sample-count EWMA
// of observed service durations, seeded from a prior.
class ClassEstimate {
 public:
  ClassEstimate(double mu_prior, double lambda_halflife_s,
                double sample_halflife);

  void observe_arrival(double t);
  void observe_service(double duration_s) { service_.observe(duration_s); }

  // Bootstrap the gap mean before any gap has been observed.
  void seed_lambda(double rate);

  // 0 until a gap (or seed) exists; afterwards 1/max(gap_mean, open gap).
  double lambda_hat(double now) const;
  double mu_hat() const { return 1.0 / service_.mean(); }

  uint64_t arrivals() const { return arrivals_; }
  bool lambda_estimable() const { return has_gap_; }
  double last_arrival() const { return last_arrival_; }

 private:
  double lambda_halflife_;
  double gap_mean_ = 0;
  bool has_gap_ = false;
  double last_arrival_ = -1;
  uint64_t arrivals_ = 0;
  DurationEwma service_;
};

}  // namespace noahsim::queueing
