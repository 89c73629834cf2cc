#pragma once

#include <istream>
#include <vector>

#include "noahsim/rng.hpp"
#include "noahsim/scenario.hpp"

namespace noahsim {

struct Arrival {
  double time = 0;
  int class_id = 0;
};

// Non-homogeneous Poisson arrivals for one class. The rate steps up each
// whole second, λ(t) = ⌈t⌉ · Λ/ramp on (0, ramp], reaching Λ in the last
// second; generation restarts a fresh homogeneous segment at every step.
// When the class does not stop at ramp end, a constant-Λ tail of
// steady_duration seconds follows.
std::vector<double> class_arrival_times(const ClassConfig& spec, RandomStream& stream);

// All classes merged in (time, class) order. One independent stream per class,
// labeled "arrival/<name>", derived from the scenario seed.
std::vector<Arrival> build_arrivals(const Scenario& sc);

struct OfferedLoad {
  double total_peak_rate = 0;   // Σ Λ_k
  double capacity = 0;          // hosts·cores / exec_time
  double peak_utilization = 0;  // ratio of the two
};

OfferedLoad total_offered_load(const Scenario& sc);

// Replay input: one arrival per line, "time_seconds,class_name".
std::vector<Arrival> load_arrival_trace(std::istream& in, const Scenario& sc);

}  // namespace noahsim
