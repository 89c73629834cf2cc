#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>

#include "noahsim/rng.hpp"
#include "noahsim/scenario.hpp"
#include "noahsim/simulation.hpp"
#include "noahsim/sweep.hpp"
#include "noahsim/verify.hpp"

namespace fs = std::filesystem;
using namespace noahsim;

namespace {

constexpr const char* kVersion = "0.1.0";

std::string default_out_dir() {
  if (const char* env = std::getenv("NOAHSIM_OUT")) return env;
  return "out";
}

std::vector<std::string> split_labels(const std::string& text) {
  std::vector<std::string> out;
  size_t start = 0;
  for (size_t i = 0; i <= text.size(); ++i) {
    if (i == text.size() || text[i] == ',') {
      std::string piece = text.substr(start, i - start);
      if (!piece.empty()) out.push_back(piece);
      start = i + 1;
    }
  }
  return out;
}

std::string hex64(uint64_t v) {
  char buf[24];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

void write_meta(const fs::path& dir, const Scenario& sc, const std::string& sched_label,
                const std::string& seeds) {
  std::ofstream meta(dir / "meta.ini");
  meta << "[meta]\n"
       << "version = " << kVersion << "\n"
       << "scenario_hash = " << hex64(sc.hash()) << "\n"
       << "scheduler = " << sched_label << "\n"
       << "seeds = " << seeds << "\n"
       << "rng = " << RandomStream::kAlgorithm << "\n"
       << "name_hash = fnv1a-64\n";
}

struct RunFlags {
  std::string scenario_path;
  std::string out_dir = default_out_dir();
  std::string label;
  std::string scheduler;
  double lambda = -1;
  long seed = -1;
  std::string alpha;
  bool trace = false;
  std::vector<std::string> sets;
};

Scenario load_with_overrides(const RunFlags& f) {
  Scenario sc = Scenario::load_file(f.scenario_path);
  if (!f.scheduler.empty()) sc.scheduler = parse_scheduler_label(f.scheduler, sc.scheduler);
  if (f.lambda >= 0) apply_override(sc, "workload.peak_rate=" + std::to_string(f.lambda));
  if (f.seed >= 0) sc.seed = static_cast<uint64_t>(f.seed);
  if (!f.alpha.empty()) apply_override(sc, "scheduler.alpha=" + f.alpha);
  if (f.trace) sc.emit_trace = true;
  for (const auto& s : f.sets) apply_override(sc, s);
  sc.finalize();
  return sc;
}

int cmd_run(const RunFlags& f) {
  Scenario sc = load_with_overrides(f);
  std::string label = f.label.empty()
                          ? "run-" + hex64(sc.hash()) + "-s" + std::to_string(sc.seed)
                          : f.label;
  fs::path dir = fs::path(f.out_dir) / label;
  fs::create_directories(dir);

  std::ofstream trace_out;
  RunOptions opts;
  if (sc.emit_trace) {
    trace_out.open(dir / "trace.jsonl");
    opts.trace = [&](double t, std::string_view cls, int site, std::string_view phase) {
      char buf[192];
      if (site >= 0) {
        std::snprintf(buf, sizeof buf,
                      "{\"time\":%.9g,\"class\":\"%.*s\",\"site\":%d,\"phase\":\"%.*s\"}",
                      t, static_cast<int>(cls.size()), cls.data(), site,
                      static_cast<int>(phase.size()), phase.data());
      } else {
        std::snprintf(buf, sizeof buf,
                      "{\"time\":%.9g,\"class\":\"%.*s\",\"site\":null,\"phase\":\"%.*s\"}",
                      t, static_cast<int>(cls.size()), cls.data(),
                      static_cast<int>(phase.size()), phase.data());
      }
      trace_out << buf << "\n";
    };
  }

  RunResult r = run_simulation(sc, opts);

  std::ofstream csv(dir / "summary.csv");
  csv << RunSummary::csv_header() << "\n" << r.summary.csv_row() << "\n";
  write_meta(dir, sc, scheduler_label(sc.scheduler), std::to_string(sc.seed));

  std::cout << r.summary.pretty();
  std::cerr << "wrote " << (dir / "summary.csv").string() << "\n";
  return 0;
}

struct SweepFlags {
  std::string scenario_path;
  std::string out_dir = default_out_dir();
  std::string label;
  std::string lambdas = "1:80";
  std::string schedulers = "ow,noncoop,noah:10ms,noah:1ms,noah:100us,noah:10us";
  std::string seeds = "1,2,3,4,5";
  int parallel = 0;
  std::vector<std::string> sets;
};

int cmd_sweep(const SweepFlags& f) {
  SweepSpec spec;
  spec.base = Scenario::load_file(f.scenario_path);
  for (const auto& s : f.sets) apply_override(spec.base, s);
  spec.lambdas = parse_lambda_grid(f.lambdas);
  for (const auto& s : split_labels(f.schedulers)) spec.schedulers.push_back(s);
  for (double v : parse_lambda_grid(f.seeds)) spec.seeds.push_back(static_cast<uint64_t>(v));
  spec.parallel = f.parallel > 0 ? f.parallel
                                 : static_cast<int>(std::thread::hardware_concurrency());

  std::string label = f.label.empty() ? "sweep-" + hex64(spec.base.hash()) : f.label;
  fs::path dir = fs::path(f.out_dir) / label;
  fs::create_directories(dir);
  std::string csv_path = (dir / "sweep.csv").string();

  std::string seed_list;
  for (size_t i = 0; i < spec.seeds.size(); ++i) {
    if (i) seed_list += ",";
    seed_list += std::to_string(spec.seeds[i]);
  }
  write_meta(dir, spec.base, f.schedulers, seed_list);

  SweepResult res = run_sweep(spec, csv_path, &std::cerr);
  std::cerr << "wrote " << csv_path << "\n";
  return res.all_ok ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"noahsim: a deterministic serverless event-scheduling simulator"};
  app.require_subcommand(1);

  RunFlags rf;
  auto* run = app.add_subcommand("run", "execute a single scenario run");
  run->add_option("scenario", rf.scenario_path, "scenario file")->required();
  run->add_option("--out", rf.out_dir, "output directory (default $NOAHSIM_OUT or ./out)");
  run->add_option("--label", rf.label, "output subdirectory name");
  run->add_option("--scheduler", rf.scheduler, "scheduler: ow|noncoop|noah[:alpha]");
  run->add_option("--lambda", rf.lambda, "peak arrival rate per class (/s)");
  run->add_option("--seed", rf.seed, "run seed");
  run->add_option("--alpha", rf.alpha, "noah waiting-time threshold (e.g. 10ms)");
  run->add_flag("--trace", rf.trace, "write per-event trace.jsonl");
  run->add_option("--set", rf.sets, "override any scenario field: section.key=value");

  SweepFlags sf;
  auto* sweep = app.add_subcommand("sweep", "run a (lambda, scheduler, seed) grid");
  sweep->add_option("scenario", sf.scenario_path, "scenario file")->required();
  sweep->add_option("--out", sf.out_dir, "output directory");
  sweep->add_option("--label", sf.label, "output subdirectory name");
  sweep->add_option("--lambda", sf.lambdas, "grid: lo:hi[:step] or comma list");
  sweep->add_option("--schedulers", sf.schedulers, "comma list of scheduler labels");
  sweep->add_option("--seeds", sf.seeds, "comma list of seeds");
  sweep->add_option("--parallel", sf.parallel, "concurrent runs (default: hw threads)");
  sweep->add_option("--set", sf.sets, "override any scenario field");

  bool quick = false;
  auto* verify = app.add_subcommand("verify", "run the analytic verification battery");
  verify->add_flag("--quick", quick, "reduced sample counts");

  CLI11_PARSE(app, argc, argv);

  try {
    if (run->parsed()) return cmd_run(rf);
    if (sweep->parsed()) return cmd_sweep(sf);
    if (verify->parsed()) return verify::run_battery_main(quick, std::cout);
  } catch (const ScenarioError& e) {
    std::cerr << "scenario error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  }
  return 0;
}
