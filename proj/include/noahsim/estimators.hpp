#pragma once

#include <vector>

#include "noahsim/queueing.hpp"
#include "noahsim/scenario.hpp"

namespace noahsim {

// Shared controller view of per-class arrival/service rates and per-site
// setup times, fed by the run driver on arrivals, completions and finished
// setups.
class EstimatorBank {
 public:
  explicit EstimatorBank(const Scenario& sc) {
    for (const auto& c : sc.classes) {
      classes_.emplace_back(sc.mu_prior_for(c), sc.estimators.lambda_halflife,
                            sc.estimators.sample_halflife);
    }
    setup_.assign(static_cast<size_t>(sc.cluster.hosts),
                  std::vector<queueing::DurationEwma>(
                      sc.classes.size(),
                      queueing::DurationEwma(std::max(sc.setup_prior_value(), 1e-9),
                                             sc.estimators.sample_halflife)));
  }

  queueing::ClassEstimate& cls(int k) { return classes_[static_cast<size_t>(k)]; }
  const queueing::ClassEstimate& cls(int k) const { return classes_[static_cast<size_t>(k)]; }
  int class_count() const { return static_cast<int>(classes_.size()); }

  double lambda_hat(int k, double now) const { return classes_[static_cast<size_t>(k)].lambda_hat(now); }
  double mu_hat(int k) const { return classes_[static_cast<size_t>(k)].mu_hat(); }
  double setup_hat(int site, int k) const {
    return setup_[static_cast<size_t>(site)][static_cast<size_t>(k)].mean();
  }

  void observe_arrival(int k, double t) { classes_[static_cast<size_t>(k)].observe_arrival(t); }
  void observe_service(int k, double d) {
    if (d > 0) classes_[static_cast<size_t>(k)].observe_service(d);
  }
  void observe_setup(int site, int k, double d) {
    if (d > 0) setup_[static_cast<size_t>(site)][static_cast<size_t>(k)].observe(d);
  }

 private:
  std::vector<queueing::ClassEstimate> classes_;
  std::vector<std::vector<queueing::DurationEwma>> setup_;
};

}  // namespace noahsim
