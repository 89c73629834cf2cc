#include "noahsim/scenario.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>

namespace noahsim {

namespace {

std::string trim(std::string_view s) {
  size_t b = 0, e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return std::string(s.substr(b, e - b));
}

std::vector<std::string> split_list(std::string_view s, char sep) {
  std::vector<std::string> out;
  size_t start = 0;
  for (size_t i = 0; i <= s.size(); ++i) {
    if (i == s.size() || s[i] == sep) {
      std::string piece = trim(s.substr(start, i - start));
      if (!piece.empty()) out.push_back(piece);
      start = i + 1;
    }
  }
  return out;
}

double parse_number(std::string_view text, std::string_view what) {
  std::string t = trim(text);
  if (t.empty()) throw ScenarioError("empty " + std::string(what));
  char* end = nullptr;
  double v = std::strtod(t.c_str(), &end);
  if (end != t.c_str() + t.size() || !std::isfinite(v)) {
    throw ScenarioError("bad " + std::string(what) + " '" + t + "'");
  }
  return v;
}

// Splits "<number><suffix>" with optional whitespace between them.
std::pair<double, std::string> number_and_suffix(std::string_view text) {
  std::string t = trim(text);
  size_t i = 0;
  while (i < t.size() &&
         (std::isdigit(static_cast<unsigned char>(t[i])) || t[i] == '.' ||
          t[i] == '-' || t[i] == '+' || t[i] == 'e' || t[i] == 'E')) {
    // 'e' only continues a number when followed by a digit or sign
    if ((t[i] == 'e' || t[i] == 'E') &&
        !(i + 1 < t.size() && (std::isdigit(static_cast<unsigned char>(t[i + 1])) ||
                               t[i + 1] == '-' || t[i + 1] == '+'))) {
      break;
    }
    ++i;
  }
  double v = parse_number(t.substr(0, i), "number");
  return {v, trim(t.substr(i))};
}

long parse_int(std::string_view text, std::string_view what) {
  double v = parse_number(text, what);
  long r = std::lround(v);
  if (v != static_cast<double>(r)) {
    throw ScenarioError("expected integer " + std::string(what) + ", got '" +
                        std::string(text) + "'");
  }
  return r;
}

bool parse_bool(std::string_view text) {
  std::string t = trim(text);
  if (t == "true" || t == "yes" || t == "1") return true;
  if (t == "false" || t == "no" || t == "0") return false;
  throw ScenarioError("bad boolean '" + t + "'");
}

std::string fmt_g17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace

double parse_duration(std::string_view text) {
  auto [v, suffix] = number_and_suffix(text);
  if (suffix.empty() || suffix == "s") return v;
  if (suffix == "us") return v * 1e-6;
  if (suffix == "ms") return v * 1e-3;
  if (suffix == "min") return v * 60.0;
  if (suffix == "h") return v * 3600.0;
  throw ScenarioError("bad duration unit '" + suffix + "' (use us, ms, s, min)");
}

double parse_size(std::string_view text) {
  auto [v, suffix] = number_and_suffix(text);
  if (suffix.empty() || suffix == "B") return v;
  if (suffix == "KB") return v * 1e3;
  if (suffix == "MB") return v * 1e6;
  if (suffix == "GB") return v * 1e9;
  if (suffix == "TB") return v * 1e12;
  throw ScenarioError("bad size unit '" + suffix + "' (use B, KB, MB, GB, TB)");
}

double parse_rate(std::string_view text) {
  auto [v, suffix] = number_and_suffix(text);
  if (suffix.empty() || suffix == "/s") return v;
  if (suffix == "B/s") return v;
  if (suffix == "KB/s") return v * 1e3;
  if (suffix == "MB/s") return v * 1e6;
  if (suffix == "GB/s") return v * 1e9;
  throw ScenarioError("bad rate unit '" + suffix + "'");
}

std::string format_duration_compact(double seconds) {
  const struct {
    double scale;
    const char* unit;
  } units[] = {{60.0, "min"}, {1.0, "s"}, {1e-3, "ms"}, {1e-6, "us"}};
  for (const auto& u : units) {
    double v = seconds / u.scale;
    if (v >= 1.0 - 1e-12) {
      char buf[48];
      std::snprintf(buf, sizeof buf, "%g%s", v, u.unit);
      return buf;
    }
  }
  char buf[48];
  std::snprintf(buf, sizeof buf, "%gs", seconds);
  return buf;
}

namespace {

Tier parse_tier(std::string_view t) {
  if (t == "disk") return Tier::disk;
  if (t == "memory") return Tier::memory;
  throw ScenarioError("bad tier '" + std::string(t) + "' (disk|memory)");
}

std::vector<DataOpSpec> parse_data_ops(std::string_view text) {
  std::vector<DataOpSpec> ops;
  for (const auto& piece : split_list(text, ',')) {
    std::istringstream is(piece);
    std::string mode, item;
    is >> mode >> item;
    if (item.empty() || (mode != "read" && mode != "write")) {
      throw ScenarioError("bad data op '" + piece + "' (want 'read <item>' or 'write <item>')");
    }
    ops.push_back({mode == "write", item, -1});
  }
  return ops;
}

std::vector<ReplicaConfig> parse_replicas(std::string_view text) {
  std::vector<ReplicaConfig> reps;
  for (const auto& piece : split_list(text, ',')) {
    auto colon = piece.find(':');
    if (colon == std::string::npos) {
      throw ScenarioError("bad replica '" + piece + "' (want '<site>:<tier>')");
    }
    ReplicaConfig r;
    r.site = static_cast<int>(parse_int(piece.substr(0, colon), "replica site"));
    r.tier = parse_tier(trim(piece.substr(colon + 1)));
    reps.push_back(r);
  }
  return reps;
}

void set_class_key(ClassConfig& c, const std::string& key, const std::string& value) {
  if (key == "exec_time") {
    c.exec_time = parse_duration(value);
  } else if (key == "exec_dist") {
    if (value == "deterministic") c.exec_dist = ExecDist::deterministic;
    else if (value == "exponential") c.exec_dist = ExecDist::exponential;
    else throw ScenarioError("bad exec_dist '" + value + "'");
  } else if (key == "threads") {
    c.threads = static_cast<int>(parse_int(value, "threads"));
    if (c.threads != 1) throw ScenarioError("only single-threaded functions are supported");
  } else if (key == "ramp") {
    c.ramp = parse_duration(value);
  } else if (key == "peak_rate") {
    c.peak_rate = parse_rate(value);
  } else if (key == "stop_after_ramp") {
    c.stop_after_ramp = parse_bool(value);
  } else if (key == "steady_duration") {
    c.steady_duration = parse_duration(value);
  } else if (key == "data_ops") {
    c.data_ops = parse_data_ops(value);
  } else {
    throw ScenarioError("unknown class key '" + key + "'", 0, key);
  }
}

void set_cluster_key(ClusterConfig& c, const std::string& key, const std::string& value) {
  if (key == "hosts") c.hosts = static_cast<int>(parse_int(value, "hosts"));
  else if (key == "cores") c.cores = static_cast<int>(parse_int(value, "cores"));
  else if (key == "mem_capacity") c.mem_capacity = parse_size(value);
  else if (key == "disk_speed") c.disk_speed = parse_rate(value);
  else if (key == "net_speed") c.net_speed = parse_rate(value);
  else if (key == "mem_speed") c.mem_speed = parse_rate(value);
  else if (key == "container_cap") c.container_cap = static_cast<int>(parse_int(value, "container_cap"));
  else if (key == "exec_slots") c.exec_slots = static_cast<int>(parse_int(value, "exec_slots"));
  else if (key == "holding_time") c.holding_time = parse_duration(value);
  else if (key == "setup_cold") c.setup_cold = parse_duration(value);
  else if (key == "setup_prewarm") c.setup_prewarm = parse_duration(value);
  else if (key == "prewarm_pool") c.prewarm_pool = static_cast<int>(parse_int(value, "prewarm_pool"));
  else if (key == "setup_consumes_core") c.setup_consumes_core = parse_bool(value);
  else if (key == "instance_footprint") c.instance_footprint = parse_size(value);
  else if (key == "code_size") c.code_size = parse_size(value);
  else throw ScenarioError("unknown cluster key '" + key + "'", 0, key);
}

void set_scheduler_key(SchedulerConfig& c, const std::string& key, const std::string& value) {
  if (key == "name") {
    if (value == "ow") c.kind = SchedulerKind::ow;
    else if (value == "noncoop") c.kind = SchedulerKind::noncoop;
    else if (value == "noah") c.kind = SchedulerKind::noah;
    else throw ScenarioError("unknown scheduler '" + value + "' (ow|noncoop|noah)");
  } else if (key == "busy_threshold") {
    c.busy_threshold = static_cast<int>(parse_int(value, "busy_threshold"));
  } else if (key == "epsilon") {
    c.nc_epsilon = parse_number(value, "epsilon");
  } else if (key == "round_cap") {
    c.nc_round_cap = static_cast<int>(parse_int(value, "round_cap"));
  } else if (key == "recompute_period") {
    c.nc_recompute_period = parse_duration(value);
  } else if (key == "recompute_rel_change") {
    c.nc_recompute_rel = parse_number(value, "recompute_rel_change");
  } else if (key == "alpha") {
    c.alpha = parse_duration(value);
  } else if (key == "control_period") {
    c.control_period = parse_duration(value);
  } else if (key == "c_min") {
    c.c_min = static_cast<int>(parse_int(value, "c_min"));
  } else if (key == "spawn_slack") {
    c.spawn_slack = static_cast<int>(parse_int(value, "spawn_slack"));
  } else {
    throw ScenarioError("unknown scheduler key '" + key + "'", 0, key);
  }
}

void set_estimator_key(EstimatorConfig& c, const std::string& key, const std::string& value) {
  if (key == "lambda_halflife") c.lambda_halflife = parse_duration(value);
  else if (key == "sample_halflife") c.sample_halflife = parse_number(value, "sample_halflife");
  else if (key == "mu_prior") c.mu_prior = (value == "auto") ? 0 : parse_rate(value);
  else if (key == "setup_prior") c.setup_prior = (value == "auto") ? -1 : parse_duration(value);
  else throw ScenarioError("unknown estimators key '" + key + "'", 0, key);
}

void set_workload_key(WorkloadTemplate& w, const std::string& key, const std::string& value) {
  if (key == "classes") {
    w.count = static_cast<int>(parse_int(value, "classes"));
  } else if (key == "name_prefix") {
    w.name_prefix = value;
  } else {
    set_class_key(w.base, key, value);
  }
}

void set_run_key(Scenario& s, const std::string& key, const std::string& value) {
  if (key == "seed") s.seed = static_cast<uint64_t>(parse_int(value, "seed"));
  else if (key == "trace") s.emit_trace = parse_bool(value);
  else if (key == "arrivals_file") s.arrivals_file = value;
  else throw ScenarioError("unknown run key '" + key + "'", 0, key);
}

void set_data_key(DataItemConfig& d, const std::string& key, const std::string& value) {
  if (key == "size") d.size = parse_size(value);
  else if (key == "replicas") d.replicas = parse_replicas(value);
  else throw ScenarioError("unknown data key '" + key + "'", 0, key);
}

}  // namespace

Scenario Scenario::load_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ScenarioError("cannot open scenario file '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse(ss.str(), path);
}

Scenario Scenario::parse(std::string_view text, const std::string& origin) {
  Scenario s;
  std::string section;
  std::string section_arg;
  ClassConfig* cur_class = nullptr;
  DataItemConfig* cur_data = nullptr;
  std::vector<ClassConfig> explicit_classes;

  int line_no = 0;
  size_t pos = 0;
  while (pos <= text.size()) {
    size_t eol = text.find('\n', pos);
    if (eol == std::string_view::npos) eol = text.size();
    std::string line(text.substr(pos, eol - pos));
    pos = eol + 1;
    ++line_no;
    if (auto hash = line.find('#'); hash != std::string::npos) line.resize(hash);
    line = trim(line);
    if (line.empty()) continue;

    try {
      if (line.front() == '[') {
        if (line.back() != ']') throw ScenarioError("unterminated section header");
        std::string inner = trim(line.substr(1, line.size() - 2));
        auto space = inner.find(' ');
        section = (space == std::string::npos) ? inner : trim(inner.substr(0, space));
        section_arg = (space == std::string::npos) ? "" : trim(inner.substr(space + 1));
        cur_class = nullptr;
        cur_data = nullptr;
        if (section == "class") {
          if (section_arg.empty()) throw ScenarioError("class section needs a name");
          explicit_classes.emplace_back(s.workload.base);
          explicit_classes.back().name = section_arg;
          cur_class = &explicit_classes.back();
        } else if (section == "data") {
          if (section_arg.empty()) throw ScenarioError("data section needs a name");
          s.data.emplace_back();
          s.data.back().name = section_arg;
          cur_data = &s.data.back();
        } else if (section != "cluster" && section != "scheduler" &&
                   section != "estimators" && section != "workload" &&
                   section != "run") {
          throw ScenarioError("unknown section '" + section + "'");
        }
        continue;
      }

      auto eq = line.find('=');
      if (eq == std::string::npos) throw ScenarioError("expected 'key = value'");
      std::string key = trim(line.substr(0, eq));
      std::string value = trim(line.substr(eq + 1));
      if (key.empty()) throw ScenarioError("empty key");

      if (section == "cluster") set_cluster_key(s.cluster, key, value);
      else if (section == "scheduler") set_scheduler_key(s.scheduler, key, value);
      else if (section == "estimators") set_estimator_key(s.estimators, key, value);
      else if (section == "workload") set_workload_key(s.workload, key, value);
      else if (section == "run") set_run_key(s, key, value);
      else if (section == "class") set_class_key(*cur_class, key, value);
      else if (section == "data") set_data_key(*cur_data, key, value);
      else throw ScenarioError("key outside of any section");
    } catch (ScenarioError& e) {
      throw ScenarioError(origin + ":" + std::to_string(line_no) + ": " + e.what(),
                          line_no, e.field);
    }
  }

  s.classes = std::move(explicit_classes);
  s.finalize();
  return s;
}

void Scenario::finalize() {
  if (classes.empty()) {
    if (workload.count < 0) throw ScenarioError("negative class count");
    for (int i = 0; i < workload.count; ++i) {
      ClassConfig c = workload.base;
      c.name = workload.name_prefix + std::to_string(i);
      classes.push_back(std::move(c));
    }
  }
  if (cluster.hosts < 1) throw ScenarioError("need at least one host");
  if (cluster.cores < 1) throw ScenarioError("need at least one core");
  if (cluster.container_cap < 1) throw ScenarioError("container_cap must be positive");
  if (cluster.exec_slots < 0) throw ScenarioError("exec_slots must be non-negative");
  if (cluster.exec_slots == 0) cluster.exec_slots = cluster.cores;
  for (auto& c : classes) {
    if (!(c.exec_time > 0)) throw ScenarioError("class '" + c.name + "': exec_time must be positive");
    if (c.peak_rate < 0) throw ScenarioError("class '" + c.name + "': negative peak_rate");
    if (!(c.ramp > 0)) throw ScenarioError("class '" + c.name + "': ramp must be positive");
    for (auto& op : c.data_ops) {
      op.item_id = -1;
      for (size_t i = 0; i < data.size(); ++i) {
        if (data[i].name == op.item) op.item_id = static_cast<int>(i);
      }
      if (op.item_id < 0) {
        throw ScenarioError("class '" + c.name + "' references unknown data item '" + op.item + "'");
      }
    }
  }
  for (size_t i = 0; i < classes.size(); ++i) {
    for (size_t j = i + 1; j < classes.size(); ++j) {
      if (classes[i].name == classes[j].name) {
        throw ScenarioError("duplicate class name '" + classes[i].name + "'");
      }
    }
  }
  for (const auto& d : data) {
    if (!(d.size > 0)) throw ScenarioError("data item '" + d.name + "': size must be positive");
    for (const auto& r : d.replicas) {
      if (r.site < 0 || r.site >= cluster.hosts) {
        throw ScenarioError("data item '" + d.name + "': replica site out of range");
      }
    }
  }
}

int Scenario::class_index(std::string_view name) const {
  for (size_t i = 0; i < classes.size(); ++i) {
    if (classes[i].name == name) return static_cast<int>(i);
  }
  return -1;
}

double Scenario::mean_peak_rate() const {
  if (classes.empty()) return 0;
  double sum = 0;
  for (const auto& c : classes) sum += c.peak_rate;
  return sum / static_cast<double>(classes.size());
}

double Scenario::mu_prior_for(const ClassConfig& c) const {
  return estimators.mu_prior > 0 ? estimators.mu_prior : 1.0 / c.exec_time;
}

double Scenario::setup_prior_value() const {
  return estimators.setup_prior >= 0 ? estimators.setup_prior : cluster.setup_cold;
}

std::string Scenario::serialize() const {
  std::ostringstream o;
  o << "[cluster]\n";
  o << "hosts = " << cluster.hosts << "\n";
  o << "cores = " << cluster.cores << "\n";
  o << "mem_capacity = " << fmt_g17(cluster.mem_capacity) << " B\n";
  o << "disk_speed = " << fmt_g17(cluster.disk_speed) << " B/s\n";
  o << "net_speed = " << fmt_g17(cluster.net_speed) << " B/s\n";
  o << "mem_speed = " << fmt_g17(cluster.mem_speed) << " B/s\n";
  o << "container_cap = " << cluster.container_cap << "\n";
  o << "exec_slots = " << cluster.exec_slots << "\n";
  o << "holding_time = " << fmt_g17(cluster.holding_time) << " s\n";
  o << "setup_cold = " << fmt_g17(cluster.setup_cold) << " s\n";
  o << "setup_prewarm = " << fmt_g17(cluster.setup_prewarm) << " s\n";
  o << "prewarm_pool = " << cluster.prewarm_pool << "\n";
  o << "setup_consumes_core = " << (cluster.setup_consumes_core ? "true" : "false") << "\n";
  o << "instance_footprint = " << fmt_g17(cluster.instance_footprint) << " B\n";
  o << "code_size = " << fmt_g17(cluster.code_size) << " B\n";
  o << "\n[scheduler]\n";
  o << "name = " << (scheduler.kind == SchedulerKind::ow
                         ? "ow"
                         : scheduler.kind == SchedulerKind::noncoop ? "noncoop" : "noah")
    << "\n";
  o << "busy_threshold = " << scheduler.busy_threshold << "\n";
  o << "epsilon = " << fmt_g17(scheduler.nc_epsilon) << "\n";
  o << "round_cap = " << scheduler.nc_round_cap << "\n";
  o << "recompute_period = " << fmt_g17(scheduler.nc_recompute_period) << " s\n";
  o << "recompute_rel_change = " << fmt_g17(scheduler.nc_recompute_rel) << "\n";
  o << "alpha = " << fmt_g17(scheduler.alpha) << " s\n";
  o << "control_period = " << fmt_g17(scheduler.control_period) << " s\n";
  o << "c_min = " << scheduler.c_min << "\n";
  o << "spawn_slack = " << scheduler.spawn_slack << "\n";
  o << "\n[estimators]\n";
  o << "lambda_halflife = " << fmt_g17(estimators.lambda_halflife) << " s\n";
  o << "sample_halflife = " << fmt_g17(estimators.sample_halflife) << "\n";
  if (estimators.mu_prior > 0) o << "mu_prior = " << fmt_g17(estimators.mu_prior) << " /s\n";
  else o << "mu_prior = auto\n";
  if (estimators.setup_prior >= 0) o << "setup_prior = " << fmt_g17(estimators.setup_prior) << " s\n";
  else o << "setup_prior = auto\n";
  for (const auto& c : classes) {
    o << "\n[class " << c.name << "]\n";
    o << "exec_time = " << fmt_g17(c.exec_time) << " s\n";
    o << "exec_dist = " << (c.exec_dist == ExecDist::deterministic ? "deterministic" : "exponential") << "\n";
    o << "threads = " << c.threads << "\n";
    o << "ramp = " << fmt_g17(c.ramp) << " s\n";
    o << "peak_rate = " << fmt_g17(c.peak_rate) << " /s\n";
    o << "stop_after_ramp = " << (c.stop_after_ramp ? "true" : "false") << "\n";
    o << "steady_duration = " << fmt_g17(c.steady_duration) << " s\n";
    if (!c.data_ops.empty()) {
      o << "data_ops = ";
      for (size_t i = 0; i < c.data_ops.size(); ++i) {
        if (i) o << ", ";
        o << (c.data_ops[i].write ? "write " : "read ") << c.data_ops[i].item;
      }
      o << "\n";
    }
  }
  for (const auto& d : data) {
    o << "\n[data " << d.name << "]\n";
    o << "size = " << fmt_g17(d.size) << " B\n";
    if (!d.replicas.empty()) {
      o << "replicas = ";
      for (size_t i = 0; i < d.replicas.size(); ++i) {
        if (i) o << ", ";
        o << d.replicas[i].site << ":" << (d.replicas[i].tier == Tier::disk ? "disk" : "memory");
      }
      o << "\n";
    }
  }
  o << "\n[run]\n";
  o << "seed = " << seed << "\n";
  o << "trace = " << (emit_trace ? "true" : "false") << "\n";
  if (!arrivals_file.empty()) o << "arrivals_file = " << arrivals_file << "\n";
  return o.str();
}

void apply_override(Scenario& s, const std::string& spec) {
  auto eq = spec.find('=');
  if (eq == std::string::npos) throw ScenarioError("override '" + spec + "' needs key=value");
  std::string path = trim(spec.substr(0, eq));
  std::string value = trim(spec.substr(eq + 1));
  auto dot = path.find('.');
  if (dot == std::string::npos) throw ScenarioError("override key '" + path + "' needs section.key");
  std::string section = path.substr(0, dot);
  std::string rest = path.substr(dot + 1);

  if (section == "cluster") set_cluster_key(s.cluster, rest, value);
  else if (section == "scheduler") set_scheduler_key(s.scheduler, rest, value);
  else if (section == "estimators") set_estimator_key(s.estimators, rest, value);
  else if (section == "workload") {
    set_workload_key(s.workload, rest, value);
    // template keys also retarget already-expanded classes
    if (rest != "classes" && rest != "name_prefix") {
      for (auto& c : s.classes) set_class_key(c, rest, value);
    }
  } else if (section == "run") {
    set_run_key(s, rest, value);
  } else if (section == "class") {
    auto dot2 = rest.find('.');
    if (dot2 == std::string::npos) throw ScenarioError("override needs class.<name>.key");
    int idx = s.class_index(rest.substr(0, dot2));
    if (idx < 0) throw ScenarioError("unknown class '" + rest.substr(0, dot2) + "'");
    set_class_key(s.classes[static_cast<size_t>(idx)], rest.substr(dot2 + 1), value);
  } else {
    throw ScenarioError("unknown override section '" + section + "'");
  }
  s.finalize();
}

SchedulerConfig parse_scheduler_label(std::string_view label, const SchedulerConfig& base) {
  SchedulerConfig cfg = base;
  std::string l = trim(label);
  auto colon = l.find(':');
  std::string name = (colon == std::string::npos) ? l : l.substr(0, colon);
  if (name == "ow") cfg.kind = SchedulerKind::ow;
  else if (name == "noncoop") cfg.kind = SchedulerKind::noncoop;
  else if (name == "noah") cfg.kind = SchedulerKind::noah;
  else throw ScenarioError("unknown scheduler label '" + l + "'");
  if (colon != std::string::npos) {
    if (name != "noah") throw ScenarioError("only noah takes a parameter: '" + l + "'");
    cfg.alpha = parse_duration(l.substr(colon + 1));
  }
  return cfg;
}

std::string scheduler_label(const SchedulerConfig& cfg) {
  switch (cfg.kind) {
    case SchedulerKind::ow: return "ow";
    case SchedulerKind::noncoop: return "noncoop";
    case SchedulerKind::noah: return "noah:" + format_duration_compact(cfg.alpha);
  }
  return "?";
}

}  // namespace noahsim
