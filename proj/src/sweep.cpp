#include "noahsim/sweep.hpp"

#include <algorithm>
#include <atomic>
#include <fstream>
#include <map>
#include <mutex>
#include <thread>

namespace noahsim {

std::vector<double> parse_lambda_grid(const std::string& text) {
  std::vector<double> out;
  auto colon = text.find(':');
  if (colon != std::string::npos) {
    double lo = std::stod(text.substr(0, colon));
    std::string rest = text.substr(colon + 1);
    auto colon2 = rest.find(':');
    double hi = std::stod(colon2 == std::string::npos ? rest : rest.substr(0, colon2));
    double step = colon2 == std::string::npos ? 1.0 : std::stod(rest.substr(colon2 + 1));
    if (step <= 0) throw ScenarioError("lambda grid stride must be positive");
    for (double v = lo; v <= hi + 1e-9; v += step) out.push_back(v);
    return out;
  }
  size_t start = 0;
  for (size_t i = 0; i <= text.size(); ++i) {
    if (i == text.size() || text[i] == ',') {
      std::string piece = text.substr(start, i - start);
      if (!piece.empty()) out.push_back(std::stod(piece));
      start = i + 1;
    }
  }
  if (out.empty()) throw ScenarioError("empty lambda grid");
  return out;
}

namespace {

struct GridPoint {
  double lambda;
  int sched_index;
  std::string sched_label;
  uint64_t seed;
};

RunSummary run_point(const SweepSpec& spec, const GridPoint& p) {
  Scenario sc = spec.base;
  sc.scheduler = parse_scheduler_label(p.sched_label, spec.base.scheduler);
  sc.seed = p.seed;
  for (auto& c : sc.classes) c.peak_rate = p.lambda;
  sc.workload.base.peak_rate = p.lambda;
  try {
    RunResult r = run_simulation(sc);
    r.summary.scheduler = p.sched_label;
    return r.summary;
  } catch (const std::exception& e) {
    RunSummary s;
    s.lambda = p.lambda;
    s.scheduler = p.sched_label;
    s.seed = p.seed;
    s.status = "error";
    s.error = e.what();
    return s;
  }
}

}  // namespace

SweepResult run_sweep(const SweepSpec& spec, const std::string& csv_path,
                      std::ostream* progress) {
  std::vector<GridPoint> points;
  for (double l : spec.lambdas) {
    for (size_t si = 0; si < spec.schedulers.size(); ++si) {
      for (uint64_t seed : spec.seeds) {
        points.push_back({l, static_cast<int>(si), spec.schedulers[si], seed});
      }
    }
  }

  // validate labels up front so a typo fails the whole sweep, not every row
  for (const auto& label : spec.schedulers) {
    (void)parse_scheduler_label(label, spec.base.scheduler);
  }

  std::ofstream csv(csv_path, std::ios::trunc);
  if (!csv) throw ScenarioError("cannot write sweep csv '" + csv_path + "'");
  csv << RunSummary::csv_header() << "\n";
  csv.flush();

  SweepResult result;
  result.rows.resize(points.size());
  std::mutex io_mutex;
  std::atomic<size_t> next{0};
  std::atomic<long> done{0};

  auto worker = [&]() {
    for (;;) {
      size_t i = next.fetch_add(1);
      if (i >= points.size()) return;
      RunSummary row = run_point(spec, points[i]);
      {
        std::lock_guard<std::mutex> lock(io_mutex);
        csv << row.csv_row() << "\n";
        csv.flush();
        result.rows[i] = row;
        if (row.status != "ok") result.all_ok = false;
        long d = ++done;
        if (progress) {
          (*progress) << "[" << d << "/" << points.size() << "] lambda=" << row.lambda
                      << " scheduler=" << row.scheduler << " seed=" << row.seed
                      << " status=" << row.status << "\n";
        }
      }
    }
  };

  int threads = std::max(1, spec.parallel);
  if (threads == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int i = 0; i < threads; ++i) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }

  // rows are indexed by grid position, which is already (lambda, scheduler,
  // seed) order; rewrite the file sorted
  std::ofstream sorted(csv_path, std::ios::trunc);
  sorted << RunSummary::csv_header() << "\n";
  for (const auto& row : result.rows) sorted << row.csv_row() << "\n";
  return result;
}

}  // namespace noahsim
