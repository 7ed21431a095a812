#include "ddc/commands.hpp"

#include <algorithm>
#include <atomic>
#include <filesystem>
#include <fstream>
#include <mutex>
#include <ostream>
#include <sstream>
#include <thread>

#include <json.hpp>

#include "ddc/closed_loop.hpp"
#include "ddc/config.hpp"
#include "ddc/csv_io.hpp"
#include "ddc/errors.hpp"

namespace ddc {

namespace {

const char* kPlotScript = R"(import csv
import sys

import matplotlib.pyplot as plt

rows = list(csv.DictReader(open(sys.argv[1] if len(sys.argv) > 1 else "steps.csv")))
t = [int(r["t"]) for r in rows]
xs = sorted(k for k in rows[0] if k.startswith("x_"))
norm = [sum(float(r[k]) ** 2 for k in xs) ** 0.5 for r in rows]
fig, (ax1, ax2) = plt.subplots(2, 1, sharex=True)
ax1.semilogy(t, [max(v, 1e-300) for v in norm])
ax1.set_ylabel("||x_p(t)||")
ax2.step(t, [int(r["mode"]) for r in rows], where="post")
ax2.set_ylabel("mode")
ax2.set_xlabel("t")
fig.savefig("trajectory.png", dpi=150)
)";

const char* kSweepPlotScript = R"(import csv
import sys

import matplotlib.pyplot as plt

rows = list(csv.DictReader(open(sys.argv[1] if len(sys.argv) > 1 else "sweep.csv")))
v = [float(r["value"]) for r in rows]
fig, (ax1, ax2) = plt.subplots(2, 1, sharex=True)
ax1.plot(v, [float(r["cumulative_cost"]) for r in rows], "o-")
ax1.set_ylabel("sum ||x_p||^2")
ax2.plot(v, [float(r["feasibility_rate"]) for r in rows], "o-")
ax2.set_ylabel("feasible fraction")
ax2.set_xlabel(rows[0]["param"])
fig.savefig("sweep.png", dpi=150)
)";

struct RunResult {
  SimulationLog log;
  RunMetrics metrics;
  ReplayAudit audit;
  std::optional<DwellDiagnostic> dwell;
  std::string dwell_note;
};

RunResult execute(const ExperimentConfig& cfg, const std::string& out_dir) {
  RunResult r;
  r.log = run_scenario(cfg);
  r.metrics = compute_metrics(r.log);
  r.audit = audit_log(cfg, r.log);
  if (cfg.scenario == Scenario::Algorithm1) {
    try {
      r.dwell = dwell_bound_diagnostic(cfg.mode_systems(), r.log, cfg.synthesis.eps1, cfg.switch_signal());
    } catch (const std::exception& e) {
      r.dwell_note = e.what();
    }
  }
  std::filesystem::create_directories(out_dir);
  write_log(out_dir, r.log, r.metrics);
  std::ofstream(out_dir + "/config.yaml") << serialize_config(cfg);
  std::ofstream(out_dir + "/plot.py") << kPlotScript;
  nlohmann::json audit = {{"max_transition_error", r.audit.max_transition_error},
                          {"lyapunov_failures", r.audit.lyapunov_failures},
                          {"lyapunov_failures_member", r.audit.lyapunov_failures_member},
                          {"lyapunov_mismatches", r.audit.lyapunov_mismatches},
                          {"membership_failures", r.audit.membership_failures},
                          {"dwell_ok", r.audit.dwell_ok},
                          {"ok", r.audit.ok()}};
  if (r.dwell)
    audit["dwell_diagnostic"] = {{"tau_bar", r.dwell->tau_bar},       {"alpha_hat", r.dwell->alpha_hat},
                                 {"c_hat", r.dwell->c_hat},           {"C2", r.dwell->C2},
                                 {"kappa", r.dwell->kappa},           {"schedule_tau", r.dwell->schedule_tau},
                                 {"schedule_satisfies", r.dwell->schedule_satisfies}};
  else if (!r.dwell_note.empty())
    audit["dwell_diagnostic"] = {{"unavailable", r.dwell_note}};
  std::ofstream(out_dir + "/audit.json") << audit.dump(2) << "\n";
  return r;
}

ExperimentConfig prepared_config(const std::string& config, std::optional<std::uint64_t> seed) {
  ExperimentConfig cfg = load_config(config);
  apply_env_overrides(cfg.solver);
  if (seed) cfg.seed = *seed;
  return cfg;
}

void print_audit(std::ostream& err, const ReplayAudit& a) {
  err << "audit failed: transition error " << format_double(a.max_transition_error) << ", lyapunov mismatches "
      << a.lyapunov_mismatches << ", lyapunov failures in region " << a.lyapunov_failures_member
      << ", membership failures " << a.membership_failures << ", dwell " << (a.dwell_ok ? "ok" : "violated") << "\n";
}

}  // namespace

int cmd_run(const std::string& config, const std::string& out_dir, std::optional<std::uint64_t> seed,
            std::ostream& out, std::ostream& err) {
  ExperimentConfig cfg;
  try {
    cfg = prepared_config(config, seed);
  } catch (const ConfigError& e) {
    err << config << ": " << e.what() << "\n";
    return kExitInvalidConfig;
  } catch (const InvalidInput& e) {
    err << e.what() << "\n";
    return kExitInvalidConfig;
  }
  RunResult r;
  try {
    r = execute(cfg, out_dir);
  } catch (const NotIdentifiable& e) {
    err << "offline data: " << e.what() << "\n";
    return kExitInvalidConfig;
  } catch (const std::exception& e) {
    err << "run failed: " << e.what() << "\n";
    return kExitError;
  }
  for (const auto& w : r.log.warnings) err << "warning: " << w << "\n";
  const RunMetrics& m = r.metrics;
  out << cfg.name << " [" << r.log.scenario << "]: ";
  if (m.solved_steps > 0) out << m.feasible_steps << "/" << m.solved_steps << " feasible steps, ";
  out << "max ||K|| " << format_double(m.max_k_norm) << ", beta " << format_double(m.envelope.beta)
      << ", cost " << format_double(m.cumulative_cost) << ", final-window mean ||x|| "
      << format_double(m.final_window_mean) << "\n";
  if (r.dwell)
    out << "dwell diagnostic: tau_bar " << format_double(r.dwell->tau_bar) << " vs tau "
        << format_double(r.dwell->schedule_tau) << "\n";
  else if (!r.dwell_note.empty())
    out << "dwell diagnostic unavailable: " << r.dwell_note << "\n";
  out << "wrote " << out_dir << "\n";
  if (!r.audit.ok()) {
    print_audit(err, r.audit);
    return kExitAuditFailed;
  }
  return kExitOk;
}

int cmd_sweep(const std::string& config, const std::string& param, const std::string& values_csv,
              const std::string& out_dir, int workers, std::ostream& out, std::ostream& err) {
  ExperimentConfig base;
  try {
    base = prepared_config(config, std::nullopt);
  } catch (const ConfigError& e) {
    err << config << ": " << e.what() << "\n";
    return kExitInvalidConfig;
  }
  std::vector<std::string> texts;
  std::vector<double> values;
  std::stringstream ss(values_csv);
  std::string cell;
  while (std::getline(ss, cell, ',')) {
    cell.erase(0, cell.find_first_not_of(" \t"));
    cell.erase(cell.find_last_not_of(" \t") + 1);
    if (cell.empty()) continue;
    std::size_t used = 0;
    double v = 0.0;
    try {
      v = std::stod(cell, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used != cell.size()) {
      err << "sweep: '" << cell << "' is not a number\n";
      return kExitInvalidConfig;
    }
    texts.push_back(cell);
    values.push_back(v);
  }
  if (values.empty()) {
    err << "sweep: empty value list\n";
    return kExitInvalidConfig;
  }
  std::vector<ExperimentConfig> cells;
  for (std::size_t i = 0; i < values.size(); ++i) {
    ExperimentConfig c = base;
    try {
      set_parameter(c, param, values[i]);
      c.validate();
    } catch (const std::invalid_argument& e) {
      err << "sweep: " << param << " = " << texts[i] << ": " << e.what() << "\n";
      return kExitInvalidConfig;
    }
    cells.push_back(c);
  }

  struct Cell {
    bool done = false;
    std::string error;
    RunResult result;
  };
  std::vector<Cell> results(cells.size());
  std::atomic<std::size_t> next{0};
  std::mutex io;
  auto worker = [&]() {
    while (true) {
      const std::size_t i = next.fetch_add(1);
      if (i >= cells.size()) return;
      const std::string dir = out_dir + "/" + param + "=" + texts[i];
      try {
        results[i].result = execute(cells[i], dir);
        results[i].done = true;
      } catch (const std::exception& e) {
        results[i].error = e.what();
      }
      std::lock_guard<std::mutex> lock(io);
      out << "  " << param << " = " << texts[i] << ": "
          << (results[i].done ? std::to_string(results[i].result.log.infeasible_steps) + " infeasible step(s)"
                              : "failed: " + results[i].error)
          << "\n";
    }
  };
  const int n = std::max(1, std::min<int>(workers, static_cast<int>(cells.size())));
  std::vector<std::thread> pool;
  for (int k = 0; k < n; ++k) pool.emplace_back(worker);
  for (auto& t : pool) t.join();

  std::filesystem::create_directories(out_dir);
  std::ofstream csv(out_dir + "/sweep.csv");
  csv << "param,value,cumulative_cost,feasibility_rate,infeasible_steps,beta,final_window_mean,max_k_norm,"
         "audit_ok,error\n";
  bool audit_failed = false;
  for (std::size_t i = 0; i < cells.size(); ++i) {
    const Cell& c = results[i];
    csv << param << "," << texts[i] << ",";
    if (!c.done) {
      csv << "nan,nan,nan,nan,nan,nan,0," << c.error << "\n";
      continue;
    }
    const RunMetrics& m = c.result.metrics;
    const double rate = m.solved_steps ? static_cast<double>(m.feasible_steps) / m.solved_steps : 1.0;
    csv << format_double(m.cumulative_cost) << "," << format_double(rate) << "," << c.result.log.infeasible_steps
        << "," << format_double(m.envelope.beta) << "," << format_double(m.final_window_mean) << ","
        << format_double(m.max_k_norm) << "," << (c.result.audit.ok() ? 1 : 0) << ",\n";
    if (!c.result.audit.ok()) audit_failed = true;
  }
  std::ofstream(out_dir + "/plot_sweep.py") << kSweepPlotScript;
  out << "wrote " << out_dir << "/sweep.csv\n";
  if (audit_failed) {
    err << "sweep: at least one cell failed its audit\n";
    return kExitAuditFailed;
  }
  return kExitOk;
}

int cmd_verify(const std::string& log_dir, std::ostream& out, std::ostream& err) {
  ExperimentConfig cfg;
  SimulationLog log;
  try {
    cfg = load_config(log_dir + "/config.yaml");
    log = read_log(log_dir);
  } catch (const ConfigError& e) {
    err << log_dir << "/config.yaml: " << e.what() << "\n";
    return kExitInvalidConfig;
  } catch (const std::exception& e) {
    err << "verify: " << e.what() << "\n";
    return kExitError;
  }
  const ReplayAudit a = audit_log(cfg, log);
  out << "steps " << log.steps.size() << ", transition error " << format_double(a.max_transition_error)
      << ", lyapunov failures " << a.lyapunov_failures << " (" << a.lyapunov_failures_member
      << " with the mode in the region), membership failures " << a.membership_failures << ", dwell "
      << (a.dwell_ok ? "ok" : "violated") << "\n";
  if (!a.ok()) {
    print_audit(err, a);
    return kExitAuditFailed;
  }
  out << "ok\n";
  return kExitOk;
}

}  // namespace ddc
