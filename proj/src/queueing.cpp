#include "noahsim/queueing.hpp"

#include <cmath>

namespace noahsim::queueing {

double erlang_c(int servers, double offered_load) {
  if (servers < 1) throw std::domain_error("erlang_c: need at least one server");
  if (!(offered_load >= 0)) throw std::domain_error("erlang_c: negative offered load");
  if (offered_load >= servers) throw std::domain_error("erlang_c: unstable (a >= c)");
  if (offered_load == 0) return 0.0;
  double b = 1.0;  // Erlang B with k servers
  for (int k = 1; k <= servers; ++k) b = offered_load * b / (k + offered_load * b);
  return servers * b / (servers - offered_load * (1.0 - b));
}

double expected_wait(int servers, double lambda, double mu) {
  if (!(mu > 0)) throw std::domain_error("expected_wait: mu must be positive");
  if (!(lambda >= 0)) throw std::domain_error("expected_wait: negative lambda");
  if (lambda == 0) return 0.0;
  if (servers * mu <= lambda) throw std::domain_error("expected_wait: unstable system");
  return erlang_c(servers, lambda / mu) / (servers * mu - lambda);
}

int min_instances(double lambda, double mu, double alpha_s, int c_min) {
  if (!(mu > 0)) throw std::domain_error("min_instances: mu must be positive");
  if (!(alpha_s > 0)) throw std::domain_error("min_instances: alpha must be positive");
  if (!(lambda >= 0)) throw std::domain_error("min_instances: negative lambda");
  if (lambda == 0) return c_min;
  int c = static_cast<int>(std::floor(lambda / mu)) + 1;
  // C(c,a) -> 0 and the denominator grows, so the search terminates.
  while (expected_wait(c, lambda, mu) >= alpha_s) ++c;
  return c;
}

DurationEwma::DurationEwma(double prior_s, double halflife_samples)
    : mean_(prior_s), keep_(std::exp2(-1.0 / halflife_samples)) {
  if (!(prior_s > 0)) throw std::domain_error("DurationEwma: prior must be positive");
  if (!(halflife_samples > 0)) throw std::domain_error("DurationEwma: bad half-life");
}

void DurationEwma::observe(double duration_s) {
  if (!(duration_s > 0)) throw std::domain_error("DurationEwma: non-positive duration");
  mean_ = keep_ * mean_ + (1.0 - keep_) * duration_s;
  ++samples_;
}

ClassEstimate::ClassEstimate(double mu_prior, double lambda_halflife_s,
                             double sample_halflife)
    : lambda_halflife_(lambda_halflife_s),
      service_(1.0 / mu_prior, sample_halflife) {
  if (!(mu_prior > 0)) throw std::domain_error("ClassEstimate: mu prior must be positive");
  if (!(lambda_halflife_s > 0)) throw std::domain_error("ClassEstimate: bad half-life");
}

void ClassEstimate::observe_arrival(double t) {
  if (last_arrival_ >= 0) {
    double gap = t - last_arrival_;
    if (!(gap > 0)) throw std::domain_error("ClassEstimate: non-positive interarrival gap");
    double keep = std::exp2(-gap / lambda_halflife_);
    gap_mean_ = has_gap_ ? keep * gap_mean_ + (1.0 - keep) * gap : gap;
    has_gap_ = true;
  }
  last_arrival_ = t;
  ++arrivals_;
}

void ClassEstimate::seed_lambda(double rate) {
  if (!(rate > 0)) throw std::domain_error("ClassEstimate: seed rate must be positive");
  gap_mean_ = 1.0 / rate;
  has_gap_ = true;
}

double ClassEstimate::lambda_hat(double now) const {
  if (!has_gap_) return 0.0;
  double gap = gap_mean_;
  if (last_arrival_ >= 0 && now - last_arrival_ > gap) gap = now - last_arrival_;
  return 1.0 / gap;
}

}  // namespace noahsim::queueing
