#include "noahsim/workload.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace noahsim {

namespace {

void fill_segment(std::vector<double>& out, RandomStream& stream, double begin,
                  double end, double rate) {
  if (rate <= 0 || end <= begin) return;
  double t = begin;
  for (;;) {
    t += stream.exponential(rate);
    if (t >= end) break;
    out.push_back(t);
  }
}

}  // namespace

std::vector<double> class_arrival_times(const ClassConfig& spec, RandomStream& stream) {
  std::vector<double> out;
  if (spec.peak_rate <= 0) return out;
  const double ramp = spec.ramp;
  const int steps = static_cast<int>(std::ceil(ramp));
  for (int s = 1; s <= steps; ++s) {
    double begin = s - 1.0;
    double end = std::min(static_cast<double>(s), ramp);
    double rate = s * spec.peak_rate / ramp;
    fill_segment(out, stream, begin, end, rate);
  }
  if (!spec.stop_after_ramp && spec.steady_duration > 0) {
    fill_segment(out, stream, ramp, ramp + spec.steady_duration, spec.peak_rate);
  }
  return out;
}

std::vector<Arrival> build_arrivals(const Scenario& sc) {
  std::vector<Arrival> all;
  for (size_t k = 0; k < sc.classes.size(); ++k) {
    RandomStream stream(sc.seed, "arrival/" + sc.classes[k].name);
    for (double t : class_arrival_times(sc.classes[k], stream)) {
      all.push_back({t, static_cast<int>(k)});
    }
  }
  std::sort(all.begin(), all.end(), [](const Arrival& x, const Arrival& y) {
    if (x.time != y.time) return x.time < y.time;
    return x.class_id < y.class_id;
  });
  return all;
}

OfferedLoad total_offered_load(const Scenario& sc) {
  OfferedLoad l;
  double min_exec = 0;
  for (const auto& c : sc.classes) {
    l.total_peak_rate += c.peak_rate;
    min_exec += c.peak_rate * c.exec_time;  // offered work, core-seconds/s
  }
  l.capacity = static_cast<double>(sc.cluster.hosts) * sc.cluster.cores;
  l.peak_utilization = l.capacity > 0 ? min_exec / l.capacity : 0;
  return l;
}

std::vector<Arrival> load_arrival_trace(std::istream& in, const Scenario& sc) {
  std::vector<Arrival> out;
  std::string line;
  int line_no = 0;
  double prev = -1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line[0] == '#') continue;
    auto comma = line.find(',');
    if (comma == std::string::npos) {
      throw ScenarioError("arrival trace line " + std::to_string(line_no) +
                          ": want 'time_seconds,class_name'", line_no);
    }
    Arrival a;
    try {
      a.time = std::stod(line.substr(0, comma));
    } catch (const std::exception&) {
      throw ScenarioError("arrival trace line " + std::to_string(line_no) +
                          ": bad time", line_no);
    }
    std::string name = line.substr(comma + 1);
    while (!name.empty() && (name.back() == '\r' || name.back() == ' ')) name.pop_back();
    a.class_id = sc.class_index(name);
    if (a.class_id < 0) {
      throw ScenarioError("arrival trace line " + std::to_string(line_no) +
                          ": unknown class '" + name + "'", line_no);
    }
    if (a.time < 0 || a.time < prev) {
      throw ScenarioError("arrival trace line " + std::to_string(line_no) +
                          ": times must be non-decreasing and non-negative", line_no);
    }
    prev = a.time;
    out.push_back(a);
  }
  return out;
}

}  // namespace noahsim
