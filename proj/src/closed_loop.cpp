#include "ddc/closed_loop.hpp"

#include <algorithm>
#include <chrono>
#include <filesystem>
#include <fstream>
#include <random>
#include <set>
#include <sstream>

#include <json.hpp>

#include "ddc/csv_io.hpp"
#include "ddc/errors.hpp"

namespace ddc {

const char* to_string(Scenario s) {
  switch (s) {
    case Scenario::Algorithm1: return "algorithm1";
    case Scenario::BaselineId: return "baseline_id";
    case Scenario::BaselineStatic: return "baseline_static";
  }
  return "?";
}

Scenario scenario_from_string(const std::string& s) {
  if (s == "algorithm1") return Scenario::Algorithm1;
  if (s == "baseline_id") return Scenario::BaselineId;
  if (s == "baseline_static") return Scenario::BaselineStatic;
  throw InvalidInput("unknown scenario '" + s + "' (expected algorithm1, baseline_id or baseline_static)");
}

void ExperimentConfig::validate() const {
  const int nx = system.nx(), nu = system.nu();
  if (nx == 0) throw InvalidInput("system: A and B are required");
  if (offline.T < 1) throw InvalidInput("offline.T must be positive");
  if (!(offline.input_lo < offline.input_hi)) throw InvalidInput("offline.input_range must satisfy lo < hi");
  if (offline.x0.size() != 0 && offline.x0.size() != nx) throw InvalidInput("offline.x0 must have n_x entries");
  if (offline.noise_bound && *offline.noise_bound < 0.0) throw InvalidInput("offline.noise_bound must be >= 0");
  if (!(delta >= 0.0)) throw InvalidInput("controller.delta must be >= 0");
  synthesis.validate();
  if (!(noise_floor >= 0.0)) throw InvalidInput("controller.noise_floor must be >= 0");
  attack.validate(system);
  if (horizon < 1) throw InvalidInput("run.horizon must be positive");
  if (x0.size() != nx) throw InvalidInput("run.x0 must have n_x entries");
  if (u0.size() != 0 && u0.size() != nu) throw InvalidInput("run.u0 must have n_u entries");
  if (noise_bound && *noise_bound < 0.0) throw InvalidInput("run.noise_bound must be >= 0");
  if (baseline_gain && (baseline_gain->rows() != nu || baseline_gain->cols() != nx))
    throw InvalidInput("run.baseline_gain must be n_u x n_x");
  if (scenario == Scenario::BaselineId && !baseline_gain)
    throw InvalidInput("scenario baseline_id needs run.baseline_gain");
  const SwitchSignal s = switch_signal();
  for (const auto& b : s.breakpoints)
    if (b.mode > attack.num_modes()) throw InvalidInput("schedule refers to mode " + std::to_string(b.mode) +
                                                        " but the attack profile has " +
                                                        std::to_string(attack.num_modes()));
}

SwitchSignal ExperimentConfig::switch_signal() const {
  if (schedule.generator_seed)
    return make_switch_signal(horizon, schedule.tau, schedule.upsilon, attack.num_modes(), *schedule.generator_seed,
                              schedule.mean_gap);
  return make_switch_signal(horizon, schedule.tau, schedule.upsilon, schedule.breakpoints);
}

std::vector<SystemModel> ExperimentConfig::mode_systems() const {
  std::vector<SystemModel> out;
  for (int j = 1; j <= attack.num_modes(); ++j) out.push_back(effective_mode_matrix(system, attack, j));
  return out;
}

DataBatch offline_batch(const ExperimentConfig& cfg) {
  std::mt19937_64 rng(cfg.seed);
  const SignalWindow u = uniform_signal(cfg.system.nu(), cfg.offline.T, cfg.offline.input_lo, cfg.offline.input_hi, rng);
  const Vector x0 = cfg.offline.x0.size() ? cfg.offline.x0 : Vector::Zero(cfg.system.nx());
  const SignalWindow x = simulate_open_loop(cfg.system, x0, u, cfg.offline.noise_bound, cfg.seed + 1);
  return build_data_batch(u, x);
}

double lyapunov_tolerance(const Matrix& P) { return 1e-7 * std::max(1.0, spectral_norm(P)); }

namespace {

double ms_since(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
}

struct Loop {
  const ExperimentConfig& cfg;
  std::vector<SystemModel> modes;
  SwitchSignal schedule;
  std::mt19937_64 noise_rng;
  SimulationLog log;

  explicit Loop(const ExperimentConfig& c)
      : cfg(c), modes(c.mode_systems()), schedule(c.switch_signal()), noise_rng(c.seed + 2) {
    log.scenario = to_string(c.scenario);
    log.power = attack_power_audit(c.attack, c.system.B);
    if (c.delta < log.power.delta_realized)
      log.warnings.push_back("delta " + format_double(c.delta) + " is below the realized attack power " +
                             format_double(log.power.delta_realized) + "; membership is logged, not asserted");
  }

  Vector noise() {
    if (!cfg.noise_bound || *cfg.noise_bound == 0.0) return Vector::Zero(cfg.system.nx());
    return sample_ball(cfg.system.nx(), *cfg.noise_bound, noise_rng);
  }

  Vector step(const StepRecord& r) const {
    const SystemModel& m = modes[static_cast<std::size_t>(r.mode - 1)];
    return m.A * r.x + m.B * r.uo + r.w;
  }

  StepRecord record(int t, const Vector& x, const Vector& uo) {
    StepRecord r;
    r.t = t;
    r.mode = schedule.mode_at(t);
    r.x = x;
    r.uo = uo;
    const Vector ua = cfg.attack.modes[static_cast<std::size_t>(r.mode - 1)].injection(x);
    r.up = ua.size() ? Vector(uo + ua) : uo;
    r.w = noise();
    return r;
  }
};

struct SolvedStep {
  MatrixEllipsoid region;
  std::optional<ControllerSolution> sol;
  std::string inter_status, synth_status;
  double inter_ms = 0.0, synth_ms = 0.0;
  bool fallback = false;
};

SolvedStep solve_step(const ExperimentConfig& cfg, const MatrixEllipsoid& ball, const Vector& x_prev,
                      const Vector& u_prev, const Vector& x_next) {
  SolvedStep s;
  IntersectionSettings is;
  is.noise_floor = cfg.noise_floor;
  is.solver = cfg.solver;
  auto start = std::chrono::steady_clock::now();
  try {
    const MatrixEllipsoid et = one_step_set(x_prev, u_prev, x_next, cfg.noise_bound);
    s.region = intersect_min_volume(ball, et, is).set;
    s.inter_status = "optimal";
  } catch (const IntersectionFailed& e) {
    s.region = ball;
    s.fallback = true;
    s.inter_status = std::string("fallback_") + sdp::to_string(e.status);
  }
  s.inter_ms = ms_since(start);
  SynthesisSettings ss;
  ss.solver = cfg.solver;
  start = std::chrono::steady_clock::now();
  try {
    s.sol = synthesize(s.region, cfg.synthesis, ss);
    s.synth_status = "optimal";
  } catch (const SynthesisInfeasible& e) {
    s.synth_status = sdp::to_string(e.status);
  }
  s.synth_ms = ms_since(start);
  return s;
}

Matrix recovered_system(const ExperimentConfig& cfg, SimulationLog& log) {
  const DataBatch batch = offline_batch(cfg);
  log.pe_certified = batch.pe_certified;
  if (!batch.pe_certified) throw NotIdentifiable("offline inputs are not persistently exciting");
  return recover_system(batch);
}

SimulationLog run_fixed_gain(const ExperimentConfig& cfg, const Matrix& K, SimulationLog log_in = {},
                             bool has_log = false) {
  Loop loop(cfg);
  if (has_log) {
    loop.log.Z_tr = log_in.Z_tr;
    loop.log.pe_certified = log_in.pe_certified;
    for (auto& w : log_in.warnings) loop.log.warnings.push_back(w);
  }
  Vector x = cfg.x0;
  Vector uo = cfg.u0.size() ? cfg.u0 : Vector::Zero(cfg.system.nu());
  for (int t = 0; t <= cfg.horizon; ++t) {
    if (t > 0) {
      x = loop.step(loop.log.steps.back());
      uo = K * x;
    }
    StepRecord r = loop.record(t, x, uo);
    r.inter_status = r.synth_status = t == 0 ? "bootstrap" : "fixed_gain";
    r.K = t == 0 ? Matrix::Zero(cfg.system.nu(), cfg.system.nx()) : K;
    r.k_norm = spectral_norm(r.K);
    loop.log.steps.push_back(r);
  }
  return loop.log;
}

}  // namespace

SimulationLog run_algorithm1(const ExperimentConfig& cfg) {
  cfg.validate();
  Loop loop(cfg);
  SimulationLog& log = loop.log;
  log.Z_tr = recovered_system(cfg, log);
  const MatrixEllipsoid ball = ball_from_offline(log.Z_tr, cfg.delta);
  const int nx = cfg.system.nx(), nu = cfg.system.nu();
  Matrix K = Matrix::Zero(nu, nx);
  Vector uo = cfg.u0.size() ? cfg.u0 : Vector::Zero(nu);
  StepRecord r0 = loop.record(0, cfg.x0, uo);
  r0.inter_status = r0.synth_status = "bootstrap";
  r0.K = K;
  log.steps.push_back(r0);
  for (int t = 1; t <= cfg.horizon; ++t) {
    const StepRecord& prev = log.steps.back();
    const Vector x = loop.step(prev);
    const SolvedStep s = solve_step(cfg, ball, prev.x, prev.uo, x);
    const int produced_by = prev.mode;
    const SystemModel& m = loop.modes[static_cast<std::size_t>(produced_by - 1)];
    const Matrix Zm = m.stacked();
    Matrix P;
    double gamma = NAN;
    if (s.sol) {
      K = s.sol->K;
      P = s.sol->P;
      gamma = s.sol->gamma;
    } else {
      ++log.infeasible_steps;
      log.degraded = true;
    }
    if (s.fallback) ++log.fallback_steps;
    StepRecord r = loop.record(t, x, K * x);
    r.inter_status = s.inter_status;
    r.synth_status = s.synth_status;
    r.inter_ms = s.inter_ms;
    r.synth_ms = s.synth_ms;
    r.gamma = gamma;
    r.K = K;
    r.P = P;
    r.k_norm = spectral_norm(K);
    r.member_residual = s.region.residual(Zm);
    r.member_asserted = spectral_norm(cfg.attack.modes[static_cast<std::size_t>(produced_by - 1)].perturbation(
                            cfg.system.B)) <= cfg.delta;
    if (P.size()) {
      r.lyap_residual = lyapunov_residual(Zm, K, P, cfg.synthesis.eps1);
      r.lyap_ok = r.lyap_residual <= lyapunov_tolerance(P) ? 1 : 0;
    }
    log.steps.push_back(r);
  }
  if (log.degraded)
    log.warnings.push_back(std::to_string(log.infeasible_steps) + " step(s) reused the previous gain (degraded run)");
  return log;
}

SimulationLog run_baseline_id(const ExperimentConfig& cfg) {
  cfg.validate();
  if (!cfg.baseline_gain) throw InvalidInput("baseline_id needs a baseline gain");
  return run_fixed_gain(cfg, *cfg.baseline_gain);
}

SimulationLog run_baseline_static(const ExperimentConfig& cfg) {
  cfg.validate();
  if (cfg.baseline_gain) return run_fixed_gain(cfg, *cfg.baseline_gain);
  // Algorithm 1's first gain, computed from the same first transition.
  SimulationLog head;
  head.Z_tr = recovered_system(cfg, head);
  Loop loop(cfg);
  const Vector uo = cfg.u0.size() ? cfg.u0 : Vector::Zero(cfg.system.nu());
  const StepRecord r0 = loop.record(0, cfg.x0, uo);
  const Vector x1 = loop.step(r0);
  const SolvedStep s = solve_step(cfg, ball_from_offline(head.Z_tr, cfg.delta), r0.x, r0.uo, x1);
  Matrix K = Matrix::Zero(cfg.system.nu(), cfg.system.nx());
  if (s.sol)
    K = s.sol->K;
  else
    head.warnings.push_back("first synthesis failed (" + s.synth_status + "); frozen gain is zero");
  return run_fixed_gain(cfg, K, head, true);
}

SimulationLog run_scenario(const ExperimentConfig& cfg) {
  switch (cfg.scenario) {
    case Scenario::Algorithm1: return run_algorithm1(cfg);
    case Scenario::BaselineId: return run_baseline_id(cfg);
    case Scenario::BaselineStatic: return run_baseline_static(cfg);
  }
  throw InvalidInput("unknown scenario");
}

Envelope fit_exponential_envelope(const std::vector<double>& norms) {
  Envelope e;
  if (norms.empty()) return e;
  const double x0 = norms.front();
  if (!(x0 > 0.0)) {
    e.beta = 0.0;
    e.C = 0.0;
    return e;
  }
  const double floor = 1e-300;
  const auto n = static_cast<double>(norms.size());
  double st = 0, sy = 0, stt = 0, sty = 0;
  for (std::size_t t = 0; t < norms.size(); ++t) {
    const double y = std::log(std::max(norms[t], floor));
    const double tt = static_cast<double>(t);
    st += tt;
    sy += y;
    stt += tt * tt;
    sty += tt * y;
  }
  const double den = n * stt - st * st;
  const double slope = den > 0.0 ? (n * sty - st * sy) / den : 0.0;
  e.beta = std::exp(slope);
  e.C = 0.0;
  for (std::size_t t = 0; t < norms.size(); ++t)
    e.C = std::max(e.C, norms[t] / (std::exp(slope * static_cast<double>(t)) * x0));
  return e;
}

RunMetrics compute_metrics(const SimulationLog& log, int final_window) {
  RunMetrics m;
  std::vector<double> norms;
  for (const auto& r : log.steps) {
    const double nrm = r.x.norm();
    norms.push_back(nrm);
    m.cumulative_cost += nrm * nrm;
    m.max_k_norm = std::max(m.max_k_norm, r.k_norm);
    if (r.synth_status != "bootstrap" && r.synth_status != "fixed_gain" && r.synth_status != "n/a") {
      ++m.solved_steps;
      if (r.synth_status == "optimal") ++m.feasible_steps;
    }
  }
  if (!norms.empty()) {
    m.initial_norm = norms.front();
    const std::size_t w = std::min<std::size_t>(static_cast<std::size_t>(std::max(final_window, 1)), norms.size());
    double s = 0.0;
    for (std::size_t i = norms.size() - w; i < norms.size(); ++i) s += norms[i];
    m.final_window_mean = s / static_cast<double>(w);
  }
  m.envelope = fit_exponential_envelope(norms);
  return m;
}

ReplayAudit audit_log(const ExperimentConfig& cfg, const SimulationLog& log, double member_tol) {
  ReplayAudit a;
  const std::vector<SystemModel> modes = cfg.mode_systems();
  const SwitchSignal schedule = cfg.switch_signal();
  a.dwell_ok = audit_dwell(schedule).ok;
  for (std::size_t k = 0; k < log.steps.size(); ++k) {
    const StepRecord& r = log.steps[k];
    if (r.mode != schedule.mode_at(r.t)) a.max_transition_error = INFINITY;
    if (k + 1 < log.steps.size()) {
      const SystemModel& m = modes[static_cast<std::size_t>(r.mode - 1)];
      const Vector pred = m.A * r.x + m.B * r.uo + r.w;
      const Vector& next = log.steps[k + 1].x;
      a.max_transition_error =
          std::max(a.max_transition_error, (next - pred).norm() / std::max(1.0, next.norm()));
    }
    if (k == 0) continue;
    const bool member = std::isfinite(r.member_residual) && r.member_residual <= member_tol;
    if (r.member_asserted && !member) ++a.membership_failures;
    if (r.P.size() && r.K.size()) {
      const int produced_by = log.steps[k - 1].mode;
      const Matrix Zm = modes[static_cast<std::size_t>(produced_by - 1)].stacked();
      const bool ok = lyapunov_residual(Zm, r.K, r.P, cfg.synthesis.eps1) <= lyapunov_tolerance(r.P);
      if (!ok) {
        ++a.lyapunov_failures;
        if (member) ++a.lyapunov_failures_member;
      }
      if ((ok ? 1 : 0) != r.lyap_ok) ++a.lyapunov_mismatches;
    } else if (r.lyap_ok != -1) {
      ++a.lyapunov_mismatches;
    }
  }
  return a;
}

double dwell_time_bound(double alpha_hat, double C2, double c_hat) {
  if (!(alpha_hat > 0.0 && alpha_hat < 1.0)) throw InvalidInput("dwell_time_bound: alpha_hat must lie in (0, 1)");
  if (!(C2 > 0.0 && c_hat > 0.0)) throw InvalidInput("dwell_time_bound: C2 and c_hat must be positive");
  return (std::log(alpha_hat) - std::log(C2) - std::log(c_hat)) / std::log(alpha_hat);
}

DwellDiagnostic dwell_bound_diagnostic(const std::vector<SystemModel>& modes, const SimulationLog& log, double eps1,
                                       const SwitchSignal& schedule) {
  if (modes.empty()) throw InvalidInput("dwell_bound_diagnostic: no modes");
  // Per-step certificate V = x' P^{-1} x, normalized to unit largest eigenvalue:
  // its smallest eigenvalue is lambda_min(P) / lambda_max(P).
  std::vector<double> ratio(modes.size(), INFINITY);
  double kappa = 0.0;
  for (std::size_t k = 1; k < log.steps.size(); ++k) {
    const StepRecord& r = log.steps[k];
    kappa = std::max(kappa, r.k_norm);
    if (r.lyap_ok != 1 || r.P.size() == 0) continue;
    const int j = log.steps[k - 1].mode;
    if (j < 1 || j > static_cast<int>(modes.size())) throw InvalidInput("dwell_bound_diagnostic: unknown mode in log");
    auto& v = ratio[static_cast<std::size_t>(j - 1)];
    v = std::min(v, min_eig(r.P) / max_eig(r.P));
  }
  std::set<int> scheduled;
  for (const auto& b : schedule.breakpoints) scheduled.insert(b.mode);
  DwellDiagnostic d;
  double lam_min = INFINITY, alpha_hat = 0.0;
  for (int j : scheduled) {
    if (j < 1 || j > static_cast<int>(modes.size())) throw InvalidInput("dwell_bound_diagnostic: unknown mode");
    const double rj = ratio[static_cast<std::size_t>(j - 1)];
    if (!std::isfinite(rj))
      throw DiagnosticUnavailable("mode " + std::to_string(j) + " has no verified Lyapunov certificate");
    lam_min = std::min(lam_min, rj);
    alpha_hat = std::max(alpha_hat, std::sqrt(1.0 - (1.0 - eps1) * rj));
  }
  const Matrix& B = modes.front().B;
  double c1 = 0.0;
  for (int j : scheduled) c1 = std::max(c1, spectral_norm(modes[static_cast<std::size_t>(j - 1)].A));
  c1 += kappa * spectral_norm(B);
  double c0 = 0.0;
  if (log.steps.size() >= 2 && log.steps[0].x.norm() > 0.0) c0 = log.steps[1].x.norm() / log.steps[0].x.norm();
  d.kappa = kappa;
  d.c_hat = std::sqrt(1.0 / lam_min);
  d.alpha_hat = alpha_hat;
  d.C0 = c0;
  d.C1 = c1;
  d.C2 = std::max(c0, c1);
  d.tau_bar = dwell_time_bound(d.alpha_hat, d.C2, d.c_hat);
  d.schedule_tau = schedule.tau;
  d.schedule_satisfies = schedule.tau > d.tau_bar;
  return d;
}

namespace {

std::string fmt(double v) { return format_double(v); }

std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> out;
  std::stringstream ss(line);
  std::string cell;
  while (std::getline(ss, cell, ',')) out.push_back(cell);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

double parse_double(const std::string& s) {
  if (s == "nan" || s.empty()) return NAN;
  return std::stod(s);
}

nlohmann::json matrix_json(const Matrix& m) {
  nlohmann::json rows = nlohmann::json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    nlohmann::json row = nlohmann::json::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    rows.push_back(row);
  }
  return rows;
}

}  // namespace

void write_log(const std::string& dir, const SimulationLog& log, const RunMetrics& metrics) {
  std::filesystem::create_directories(dir);
  if (log.steps.empty()) throw InvalidInput("write_log: empty log");
  const auto nx = log.steps.front().x.size(), nu = log.steps.front().uo.size();
  std::ofstream os(dir + "/steps.csv");
  os << "t,mode";
  for (Eigen::Index i = 0; i < nx; ++i) os << ",x_" << i + 1;
  for (Eigen::Index i = 0; i < nu; ++i) os << ",uo_" << i + 1;
  for (Eigen::Index i = 0; i < nu; ++i) os << ",up_" << i + 1;
  for (Eigen::Index i = 0; i < nx; ++i) os << ",w_" << i + 1;
  os << ",inter_status,synth_status,gamma,k_norm,lyap_ok,lyap_residual,member_residual,member_asserted,"
        "inter_ms,synth_ms";
  for (Eigen::Index i = 0; i < nu; ++i)
    for (Eigen::Index j = 0; j < nx; ++j) os << ",K_" << i + 1 << "_" << j + 1;
  for (Eigen::Index i = 0; i < nx; ++i)
    for (Eigen::Index j = 0; j < nx; ++j) os << ",P_" << i + 1 << "_" << j + 1;
  os << "\n";
  for (const auto& r : log.steps) {
    os << r.t << "," << r.mode;
    for (Eigen::Index i = 0; i < nx; ++i) os << "," << fmt(r.x(i));
    for (Eigen::Index i = 0; i < nu; ++i) os << "," << fmt(r.uo(i));
    for (Eigen::Index i = 0; i < nu; ++i) os << "," << fmt(r.up(i));
    for (Eigen::Index i = 0; i < nx; ++i) os << "," << fmt(r.w.size() ? r.w(i) : 0.0);
    os << "," << r.inter_status << "," << r.synth_status << "," << fmt(r.gamma) << "," << fmt(r.k_norm) << ","
       << r.lyap_ok << "," << fmt(r.lyap_residual) << "," << fmt(r.member_residual) << ","
       << (r.member_asserted ? 1 : 0) << "," << fmt(r.inter_ms) << "," << fmt(r.synth_ms);
    for (Eigen::Index i = 0; i < nu; ++i)
      for (Eigen::Index j = 0; j < nx; ++j) os << "," << fmt(r.K.size() ? r.K(i, j) : NAN);
    for (Eigen::Index i = 0; i < nx; ++i)
      for (Eigen::Index j = 0; j < nx; ++j) os << "," << fmt(r.P.size() ? r.P(i, j) : NAN);
    os << "\n";
  }
  nlohmann::json meta = {{"scenario", log.scenario},
                         {"nx", nx},
                         {"nu", nu},
                         {"pe_certified", log.pe_certified},
                         {"degraded", log.degraded},
                         {"infeasible_steps", log.infeasible_steps},
                         {"fallback_steps", log.fallback_steps},
                         {"phi_realized", log.power.phi_realized},
                         {"delta_realized", log.power.delta_realized},
                         {"warnings", log.warnings},
                         {"Z_tr", matrix_json(log.Z_tr)},
                         {"metrics",
                          {{"cumulative_cost", metrics.cumulative_cost},
                           {"final_window_mean", metrics.final_window_mean},
                           {"initial_norm", metrics.initial_norm},
                           {"max_k_norm", metrics.max_k_norm},
                           {"feasible_steps", metrics.feasible_steps},
                           {"solved_steps", metrics.solved_steps},
                           {"beta", metrics.envelope.beta},
                           {"envelope_C", metrics.envelope.C}}}};
  std::ofstream(dir + "/meta.json") << meta.dump(2) << "\n";
}

SimulationLog read_log(const std::string& dir) {
  std::ifstream ms(dir + "/meta.json");
  if (!ms) throw InvalidInput("read_log: missing " + dir + "/meta.json");
  const auto meta = nlohmann::json::parse(ms);
  SimulationLog log;
  log.scenario = meta.at("scenario").get<std::string>();
  log.pe_certified = meta.at("pe_certified").get<bool>();
  log.degraded = meta.at("degraded").get<bool>();
  log.infeasible_steps = meta.at("infeasible_steps").get<int>();
  log.fallback_steps = meta.at("fallback_steps").get<int>();
  log.power.phi_realized = meta.at("phi_realized").get<double>();
  log.power.delta_realized = meta.at("delta_realized").get<double>();
  log.warnings = meta.at("warnings").get<std::vector<std::string>>();
  const auto& z = meta.at("Z_tr");
  if (!z.empty()) {
    log.Z_tr.resize(static_cast<Eigen::Index>(z.size()), static_cast<Eigen::Index>(z[0].size()));
    for (std::size_t i = 0; i < z.size(); ++i)
      for (std::size_t j = 0; j < z[i].size(); ++j)
        log.Z_tr(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = z[i][j].get<double>();
  }
  const int nx = meta.at("nx").get<int>(), nu = meta.at("nu").get<int>();
  std::ifstream is(dir + "/steps.csv");
  if (!is) throw InvalidInput("read_log: missing " + dir + "/steps.csv");
  std::string line;
  std::getline(is, line);
  const std::size_t expected = static_cast<std::size_t>(2 + 2 * nx + 2 * nu + 10 + nu * nx + nx * nx);
  if (split(line).size() != expected) throw InvalidInput("read_log: unexpected steps.csv header");
  int row = 1;
  while (std::getline(is, line)) {
    ++row;
    if (line.empty()) continue;
    const auto c = split(line);
    if (c.size() != expected) throw InvalidInput("read_log: steps.csv row " + std::to_string(row) + " has " +
                                                 std::to_string(c.size()) + " cells");
    std::size_t k = 0;
    StepRecord r;
    r.t = std::stoi(c[k++]);
    r.mode = std::stoi(c[k++]);
    auto vec = [&](int n) {
      Vector v(n);
      for (int i = 0; i < n; ++i) v(i) = parse_double(c[k++]);
      return v;
    };
    r.x = vec(nx);
    r.uo = vec(nu);
    r.up = vec(nu);
    r.w = vec(nx);
    r.inter_status = c[k++];
    r.synth_status = c[k++];
    r.gamma = parse_double(c[k++]);
    r.k_norm = parse_double(c[k++]);
    r.lyap_ok = std::stoi(c[k++]);
    r.lyap_residual = parse_double(c[k++]);
    r.member_residual = parse_double(c[k++]);
    r.member_asserted = c[k++] == "1";
    r.inter_ms = parse_double(c[k++]);
    r.synth_ms = parse_double(c[k++]);
    Matrix K(nu, nx), P(nx, nx);
    for (int i = 0; i < nu; ++i)
      for (int j = 0; j < nx; ++j) K(i, j) = parse_double(c[k++]);
    for (int i = 0; i < nx; ++i)
      for (int j = 0; j < nx; ++j) P(i, j) = parse_double(c[k++]);
    if (!K.hasNaN()) r.K = K;
    if (!P.hasNaN()) r.P = P;
    log.steps.push_back(r);
  }
  return log;
}

}  // namespace ddc
