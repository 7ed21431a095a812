#pragma once

#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "ddc/attack.hpp"
#include "ddc/consistency_sets.hpp"
#include "ddc/linalg.hpp"
#include "ddc/synthesis.hpp"
#include "ddc/system_data.hpp"

namespace ddc {

enum class Scenario { Algorithm1, BaselineId, BaselineStatic };
const char* to_string(Scenario s);
Scenario scenario_from_string(const std::string& s);  // throws InvalidInput

struct OfflineConfig {
  int T = 15;
  double input_lo = -0.3;
  double input_hi = 0.3;
  Vector x0;  // defaults to zero
  std::optional<double> noise_bound;
};

// Either explicit breakpoints or a seeded generator.
struct ScheduleConfig {
  double tau = 10.0;
  double upsilon = 1.0;
  std::vector<Breakpoint> breakpoints;
  std::optional<std::uint64_t> generator_seed;
  double mean_gap = 20.0;
};

struct ExperimentConfig {
  std::string name = "experiment";
  SystemModel system;
  OfflineConfig offline;
  double delta = 0.1;
  SynthesisParams synthesis;
  double noise_floor = 1e-3;
  AttackProfile attack;
  ScheduleConfig schedule;
  int horizon = 120;
  std::uint64_t seed = 1;
  Vector x0;
  Vector u0;  // defaults to zero
  std::optional<double> noise_bound;  // online process noise
  Scenario scenario = Scenario::Algorithm1;
  std::optional<Matrix> baseline_gain;  // fixed gain for the baselines
  sdp::SolverSettings solver;

  // Throws InvalidInput when dimensions or ranges are inconsistent.
  void validate() const;
  SwitchSignal switch_signal() const;
  std::vector<SystemModel> mode_systems() const;
};

struct StepRecord {
  int t = 0;
  int mode = 1;  // sigma(t), acting on the transition t -> t + 1
  Vector x, uo, up, w;  // w: process noise added on t -> t + 1
  std::string inter_status = "n/a";
  std::string synth_status = "n/a";
  double gamma = NAN;
  double k_norm = 0.0;
  int lyap_ok = -1;  // Lyapunov check for the mode that produced x(t); -1 when not applicable
  double lyap_residual = NAN;
  double member_residual = NAN;  // QMI residual of that mode in the region used at t
  bool member_asserted = false;  // whether the mode's perturbation is within delta
  double inter_ms = 0.0;
  double synth_ms = 0.0;
  Matrix K;
  Matrix P;  // empty when no certificate was computed at t
};

struct SimulationLog {
  std::string scenario;
  std::vector<StepRecord> steps;
  Matrix Z_tr;
  bool pe_certified = false;
  bool degraded = false;
  int infeasible_steps = 0;
  int fallback_steps = 0;
  PowerAudit power;
  std::vector<std::string> warnings;
};

// Offline batch from the configured experiment (seeded inputs, healthy system).
DataBatch offline_batch(const ExperimentConfig& cfg);

SimulationLog run_algorithm1(const ExperimentConfig& cfg);
// Fixed gain: cfg.baseline_gain (required).
SimulationLog run_baseline_id(const ExperimentConfig& cfg);
// Frozen gain: cfg.baseline_gain if set, otherwise Algorithm 1's first gain.
SimulationLog run_baseline_static(const ExperimentConfig& cfg);
SimulationLog run_scenario(const ExperimentConfig& cfg);

struct Envelope {
  double beta = NAN;  // fitted per-step rate
  double C = NAN;     // smallest C with ||x(t)|| <= C beta^t ||x(0)|| for every sample
  bool convergent() const { return beta < 1.0; }
};
// Least-squares fit of log ||x(t)|| = a + t log beta over the logged states,
// then the tightest constant for that rate.
Envelope fit_exponential_envelope(const std::vector<double>& norms);

struct RunMetrics {
  double cumulative_cost = 0.0;  // sum_t ||x(t)||^2
  double final_window_mean = 0.0;  // mean ||x(t)|| over the last window
  double initial_norm = 0.0;
  double max_k_norm = 0.0;
  int feasible_steps = 0;
  int solved_steps = 0;
  Envelope envelope;
};
RunMetrics compute_metrics(const SimulationLog& log, int final_window = 20);

struct ReplayAudit {
  double max_transition_error = 0.0;
  int lyapunov_failures = 0;  // recomputed from K, P, any step
  int lyapunov_failures_member = 0;  // ... at steps where the mode lies in the region
  int lyapunov_mismatches = 0;  // recomputed vs logged flag
  int membership_failures = 0;  // asserted steps above tolerance
  bool dwell_ok = true;
  bool ok(double tol = 1e-7) const {
    return max_transition_error <= tol && lyapunov_mismatches == 0 && lyapunov_failures_member == 0 && membership_failures == 0 && dwell_ok;
  }
};
// Re-checks a log against the oracle model of the config.
ReplayAudit audit_log(const ExperimentConfig& cfg, const SimulationLog& log, double member_tol = 1e-7);

// tau_bar = (ln alpha_hat - ln C2 - ln c_hat) / ln alpha_hat.
double dwell_time_bound(double alpha_hat, double C2, double c_hat);

struct DwellDiagnostic {
  double c_hat = NAN, alpha_hat = NAN, C0 = NAN, C1 = NAN, C2 = NAN, kappa = NAN;
  double tau_bar = NAN;
  double schedule_tau = NAN;
  bool schedule_satisfies = false;
};
// Oracle-side constants from the per-step certificates in the log. Throws
// DiagnosticUnavailable when a scheduled mode has no verified certificate.
DwellDiagnostic dwell_bound_diagnostic(const std::vector<SystemModel>& modes, const SimulationLog& log, double eps1,
                                       const SwitchSignal& schedule);

// Lyapunov tolerance used for per-step checks.
double lyapunov_tolerance(const Matrix& P);

// steps.csv and meta.json in dir (created if needed).
void write_log(const std::string& dir, const SimulationLog& log, const RunMetrics& metrics);
SimulationLog read_log(const std::string& dir);

}  // namespace ddc
