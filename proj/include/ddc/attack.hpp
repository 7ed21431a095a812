#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "ddc/linalg.hpp"
#include "ddc/system_data.hpp"

namespace ddc {

// One attack mode. An FDI mode injects u_a = D Ka x into the actuators, so the
// attacked state matrix is A_tr + B_tr D Ka. A raw additive mode perturbs the
// state matrix directly (A_tr + additive), as for actuator-independent faults.
struct AttackMode {
  enum class Kind { Fdi, RawAdditive };
  Kind kind = Kind::Fdi;
  Matrix D;         // n_u x n_u diagonal 0/1 selector (FDI)
  Matrix Ka;        // n_u x n_x attack gain (FDI)
  Matrix additive;  // n_x x n_x (raw additive)

  static AttackMode fdi(Matrix D, Matrix Ka);
  static AttackMode raw(Matrix additive);

  // Injected actuator signal; zero for raw additive modes.
  Vector injection(const Vector& x) const;
  // A_j - A_tr.
  Matrix perturbation(const Matrix& B_tr) const;
};

struct AttackProfile {
  std::vector<AttackMode> modes;  // mode j is modes[j - 1]
  std::optional<double> phi;      // power bound on ||D Ka||, checked when set

  int num_modes() const { return static_cast<int>(modes.size()); }
  // Shapes, selector structure and the power bound. Throws InvalidInput.
  void validate(const SystemModel& sys) const;
};

// Nonempty channel subsets as diagonal 0/1 matrices, ordered by subset size and
// then lexicographically, e.g. {1},{2},{3},{1,2},{1,3},{2,3},{1,2,3} for n_u = 3.
std::vector<Matrix> enumerate_channel_selectors(int nu);

// (A_tr + perturbation of mode j, B_tr), with j 1-based.
SystemModel effective_mode_matrix(const SystemModel& sys, const AttackProfile& profile, int j);

struct PowerAudit {
  double phi_realized = 0.0;    // max_j ||D_j Ka_j|| over FDI modes
  double delta_realized = 0.0;  // max_j ||A_j - A_tr||
};
PowerAudit attack_power_audit(const AttackProfile& profile, const Matrix& B_tr);

struct Breakpoint {
  int t = 0;
  int mode = 1;
  bool operator==(const Breakpoint&) const = default;
};

struct SwitchSignal {
  std::vector<Breakpoint> breakpoints;  // first at t = 0
  int horizon = 0;
  double tau = 2.0;
  double upsilon = 0.0;

  int mode_at(int t) const;
  // Number of switch instants t_s (s >= 1) with t1 <= t_s < t2.
  int switches_in(int t1, int t2) const;
};

struct DwellAudit {
  bool ok = true;
  int t1 = 0, t2 = 0;  // worst window
  int count = 0;
  double bound = 0.0;
  double worst_slack = 0.0;  // min over windows of bound - count
};
// Checks N(t1, t2) <= upsilon + (t2 - t1) / tau for every 0 <= t1 <= t2 <= horizon.
DwellAudit audit_dwell(const SwitchSignal& s);

// Explicit schedule; throws InvalidSchedule unless it is well formed and passes
// the exhaustive dwell audit.
SwitchSignal make_switch_signal(int horizon, double tau, double upsilon, std::vector<Breakpoint> breakpoints);

// Seeded schedule over modes 1..num_modes: geometric inter-switch gaps with the
// given mean, each switch pushed later until the dwell inequality holds.
SwitchSignal make_switch_signal(int horizon, double tau, double upsilon, int num_modes, std::uint64_t seed,
                                double mean_gap);

}  // namespace ddc
