#include "noahsim/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>

#include "noahsim/scenario.hpp"

namespace noahsim {

std::optional<double> container_utilization(const std::vector<ContainerRecord>& recs) {
  if (recs.empty()) return std::nullopt;
  double busy = 0, life = 0;
  for (const auto& r : recs) {
    busy += r.busy_time;
    life += (r.ever_active ? r.last_active_end : r.setup_ready_at) - r.created_at;
  }
  if (life <= 0) return std::nullopt;
  return busy / life;
}

namespace {

double percentile(const std::vector<double>& sorted, double q) {
  if (sorted.empty()) return 0;
  size_t rank = static_cast<size_t>(std::ceil(q * static_cast<double>(sorted.size())));
  if (rank == 0) rank = 1;
  return sorted[std::min(rank - 1, sorted.size() - 1)];
}

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.9g", v);
  return buf;
}

}  // namespace

std::string csv_quote(const std::string& field) {
  if (field.find_first_of(",\"\n\r") == std::string::npos) return field;
  std::string out = "\"";
  for (char c : field) {
    if (c == '"') out += '"';
    out += c;
  }
  out += '"';
  return out;
}

RunSummary summarize(const Scenario& sc, const std::string& scheduler_label,
                     const RunMetrics& m, double final_time, uint64_t digest) {
  RunSummary s;
  s.lambda = sc.mean_peak_rate();
  s.scheduler = scheduler_label;
  s.seed = sc.seed;
  s.total_events = static_cast<long>(m.events.size());
  s.completions = m.completions;
  s.cold_starts = m.containers_created;
  s.hosts_employed = m.hosts_employed();
  s.final_time = final_time;
  s.trace_digest = digest;
  s.utilization = container_utilization(m.containers);

  std::vector<double> responses;
  responses.reserve(m.events.size());
  double wait_sum = 0, exec_sum = 0;
  long n = 0;
  for (const auto& e : m.events) {
    if (e.completion < 0) continue;
    responses.push_back(e.completion - e.arrival);
    wait_sum += e.start - e.arrival;
    exec_sum += e.completion - e.start;
    ++n;
  }
  if (n > 0) {
    double total = 0;
    for (double r : responses) total += r;
    s.mean_response = total / static_cast<double>(n);
    s.mean_wait = wait_sum / static_cast<double>(n);
    s.mean_exec = exec_sum / static_cast<double>(n);
    std::sort(responses.begin(), responses.end());
    s.p50_response = percentile(responses, 0.50);
    s.p95_response = percentile(responses, 0.95);
    s.p99_response = percentile(responses, 0.99);
  }

  if (m.saturated) s.flags += "saturated";
  if (!m.equilibrium_converged) {
    if (!s.flags.empty()) s.flags += ";";
    s.flags += "nc-nonconverged";
  }
  return s;
}

std::string RunSummary::csv_header() {
  return "lambda,scheduler,seed,status,total_events,completions,cold_starts,"
         "hosts_employed,mean_response_s,p50_response_s,p95_response_s,"
         "p99_response_s,mean_wait_s,mean_exec_s,container_utilization,"
         "final_time_s,trace_digest,flags,error";
}

std::string RunSummary::csv_row() const {
  std::ostringstream o;
  char digest_hex[24];
  std::snprintf(digest_hex, sizeof digest_hex, "%016llx",
                static_cast<unsigned long long>(trace_digest));
  o << fmt(lambda) << ',' << csv_quote(scheduler) << ',' << seed << ','
    << csv_quote(status) << ',';
  if (status == "ok") {
    o << total_events << ',' << completions << ',' << cold_starts << ','
      << hosts_employed << ',' << fmt(mean_response) << ','
      << fmt(p50_response) << ',' << fmt(p95_response) << ','
      << fmt(p99_response) << ',' << fmt(mean_wait) << ',' << fmt(mean_exec)
      << ',' << (utilization ? fmt(*utilization) : std::string()) << ','
      << fmt(final_time) << ',' << digest_hex << ',' << csv_quote(flags) << ',';
  } else {
    o << ",,,,,,,,,,,,,";
  }
  o << csv_quote(error);
  return o.str();
}

std::string RunSummary::pretty() const {
  std::ostringstream o;
  o << "lambda:                " << fmt(lambda) << "\n"
    << "scheduler:             " << scheduler << "\n"
    << "seed:                  " << seed << "\n"
    << "status:                " << status << "\n"
    << "total events:          " << total_events << "\n"
    << "completions:           " << completions << "\n"
    << "cold starts:           " << cold_starts << "\n"
    << "hosts employed:        " << hosts_employed << "\n"
    << "mean response:         " << fmt(mean_response) << " s\n"
    << "p50/p95/p99 response:  " << fmt(p50_response) << " / " << fmt(p95_response)
    << " / " << fmt(p99_response) << " s\n"
    << "mean wait:             " << fmt(mean_wait) << " s\n"
    << "mean exec:             " << fmt(mean_exec) << " s\n"
    << "container utilization: " << (utilization ? fmt(*utilization) : std::string("n/a")) << "\n"
    << "final time:            " << fmt(final_time) << " s\n";
  char digest_hex[24];
  std::snprintf(digest_hex, sizeof digest_hex, "%016llx",
                static_cast<unsigned long long>(trace_digest));
  o << "trace digest:          " << digest_hex << "\n";
  if (!flags.empty()) o << "flags:                 " << flags << "\n";
  if (!error.empty()) o << "error:                 " << error << "\n";
  return o.str();
}

}  // namespace noahsim
